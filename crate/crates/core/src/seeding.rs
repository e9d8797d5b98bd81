//! Deterministic seed derivation.
//!
//! A master seed is mixed with the trial index through splitmix64 to give a
//! trial seed. Every random stream inside a trial is a ChaCha8 generator
//! keyed by the trial seed, on its own stream number: stream 0 drives the
//! environment and stream `i + 1` belongs to agent `i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn environment_rng(trial_seed: u64) -> ChaCha8Rng {
    stream(trial_seed, 0)
}

pub fn agent_rng(trial_seed: u64, agent: usize) -> ChaCha8Rng {
    stream(trial_seed, agent as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference generator seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let s = trial_seed(7, 3);
        assert_eq!(s, trial_seed(7, 3));
        assert_ne!(s, trial_seed(7, 4));
        assert_ne!(s, trial_seed(8, 3));
        let a: Vec<u64> = (0..4).map(|_| agent_rng(s, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = agent_rng(s, 0).random();
        let y: u64 = agent_rng(s, 1).random();
        let z: u64 = environment_rng(s).random();
        assert!(x != y && y != z && x != z);
    }
}
