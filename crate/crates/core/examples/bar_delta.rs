//! Gap to the nearest suboptimality level, and a perturbation size that keeps
//! Q-factors and values within it.

use symga::games;
use symga::policy::QuantizedPolicySet;
use symga::solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rps = games::rock_paper_scissors(0.0);
    let grid = QuantizedPolicySet::new(3, 1, 10)?;
    let bd = solver::compute_bar_delta(&rps, &grid, 0.2, 1e-10)?;
    println!("bar_delta = {:.6} ({} distinct suboptimality values)", bd.bar_delta, bd.profile.len());
    let deltas = vec![bd.bar_delta / 2.0; 2];
    match solver::search_rho_by_halving(&rps, &grid, 0.5, &deltas, bd.bar_delta, 1e-10, 20)? {
        Some(s) => println!(
            "rho = {} after {} halvings (Q deviation {:.2e}, J deviation {:.2e}, threshold {:.2e})",
            s.rho, s.halvings, s.check.max_q_deviation, s.check.max_j_deviation, s.check.threshold
        ),
        None => println!("no rho found"),
    }
    Ok(())
}
