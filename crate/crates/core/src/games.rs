//! A small library of ready-made games.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Game, GameSpec};

/// Row player's reward in Rock-Paper-Scissors (Rock, Paper, Scissors).
pub const RPS_REWARD: [[f64; 3]; 3] = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];

/// Two-player Rock-Paper-Scissors as a one-state stochastic game.
///
/// Costs are negated rewards: player 0 pays `-RPS_REWARD[a][b]` and player 1
/// pays `RPS_REWARD[a][b]` when the joint action is `(a, b)`.
pub fn rock_paper_scissors(discount: f64) -> Game {
    rock_paper_scissors_spec(discount)
        .validate()
        .expect("rock-paper-scissors is well formed")
}

pub fn rock_paper_scissors_spec(discount: f64) -> GameSpec {
    let mut c0 = Vec::with_capacity(9);
    let mut c1 = Vec::with_capacity(9);
    for row in RPS_REWARD {
        for r in row {
            c0.push(0.0 - r);
            c1.push(r);
        }
    }
    GameSpec {
        num_players: 2,
        num_states: 1,
        num_actions: vec![3, 3],
        discount: vec![discount, discount],
        cost: vec![vec![c0], vec![c1]],
        kernel: vec![vec![vec![1.0]; 9]],
        initial_dist: vec![1.0],
    }
}

/// Two players, two states, two actions each, every kernel row uniform.
pub fn uniform_two_state() -> GameSpec {
    // cost[player][state][joint], joint = 2 * a0 + a1
    GameSpec {
        num_players: 2,
        num_states: 2,
        num_actions: vec![2, 2],
        discount: vec![0.9, 0.9],
        cost: vec![
            vec![vec![1.0, -2.0, 0.5, 3.0], vec![0.0, 1.5, -0.25, 2.0]],
            vec![vec![1.0, 0.5, -2.0, 3.0], vec![0.0, -0.25, 1.5, 2.0]],
        ],
        kernel: vec![vec![vec![0.5, 0.5]; 4]; 2],
        initial_dist: vec![0.5, 0.5],
    }
}

/// Two-player coordination game with a dominant joint action `(0, 0)`.
pub fn dominant_team_game() -> Game {
    let table = vec![0.0, 1.0, 1.0, 2.0];
    GameSpec {
        num_players: 2,
        num_states: 1,
        num_actions: vec![2, 2],
        discount: vec![0.0, 0.0],
        cost: vec![vec![table.clone()], vec![table]],
        kernel: vec![vec![vec![1.0]; 4]],
        initial_dist: vec![1.0],
    }
    .validate()
    .expect("team game is well formed")
}

/// One-state matching game: each player pays the fraction of other players
/// whose action differs from its own.
pub fn matching_game(num_players: usize, num_actions: usize) -> Game {
    let shape = vec![num_actions; num_players];
    let joints = joint_actions(&shape);
    let others = (num_players - 1).max(1) as f64;
    let cost = (0..num_players)
        .map(|i| {
            vec![joints
                .iter()
                .map(|a| a.iter().filter(|&&b| b != a[i]).count() as f64 / others)
                .collect()]
        })
        .collect();
    GameSpec {
        num_players,
        num_states: 1,
        num_actions: shape,
        discount: vec![0.0; num_players],
        cost,
        kernel: vec![vec![vec![1.0]; joints.len()]],
        initial_dist: vec![1.0],
    }
    .validate()
    .expect("matching game is well formed")
}

/// One-state identical-interest game whose common cost depends only on the
/// multiset of actions played, with random table entries.
pub fn identical_interest(num_players: usize, num_actions: usize, discount: f64, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = vec![num_actions; num_players];
    let joints = joint_actions(&shape);
    let mut table: HashMap<Vec<usize>, f64> = HashMap::new();
    let common: Vec<f64> = joints
        .iter()
        .map(|a| *table.entry(counts(a, num_actions)).or_insert_with(|| rng.random()))
        .collect();
    GameSpec {
        num_players,
        num_states: 1,
        num_actions: shape,
        discount: vec![discount; num_players],
        cost: vec![vec![common]; num_players],
        kernel: vec![vec![vec![1.0]; joints.len()]],
        initial_dist: vec![1.0],
    }
    .validate()
    .expect("identical-interest game is well formed")
}

/// Random symmetric game.
///
/// Player `i`'s cost at `(x, a)` is a random function of the state, its own
/// action and the multiset of the other players' actions; the kernel row at
/// `(x, a)` is a random function of the state and the multiset of all actions.
/// Both constructions are invariant under relabelling the players. Every
/// kernel entry is at least `min_prob` (which must satisfy
/// `min_prob * num_states <= 1`).
pub fn random_symmetric_game<R: Rng + ?Sized>(
    rng: &mut R,
    num_players: usize,
    num_states: usize,
    num_actions: usize,
    discount: f64,
    min_prob: f64,
) -> Game {
    assert!(min_prob * num_states as f64 <= 1.0);
    let shape = vec![num_actions; num_players];
    let joints = joint_actions(&shape);

    let mut cost_table: HashMap<(usize, usize, Vec<usize>), f64> = HashMap::new();
    let mut cost = vec![vec![Vec::with_capacity(joints.len()); num_states]; num_players];
    for x in 0..num_states {
        for a in &joints {
            for i in 0..num_players {
                let mut others = a.clone();
                let own = others.remove(i);
                let key = (x, own, counts(&others, num_actions));
                let c = *cost_table.entry(key).or_insert_with(|| rng.random());
                cost[i][x].push(c);
            }
        }
    }

    let mut kernel_table: HashMap<(usize, Vec<usize>), Vec<f64>> = HashMap::new();
    let slack = 1.0 - min_prob * num_states as f64;
    let kernel = (0..num_states)
        .map(|x| {
            joints
                .iter()
                .map(|a| {
                    kernel_table
                        .entry((x, counts(a, num_actions)))
                        .or_insert_with(|| {
                            let w: Vec<f64> = (0..num_states).map(|_| rng.random::<f64>() + 1e-3).collect();
                            let total: f64 = w.iter().sum();
                            let mut row: Vec<f64> = w.iter().map(|v| min_prob + slack * v / total).collect();
                            // pin the row sum to 1 up to a single rounding
                            let tail: f64 = row[..num_states - 1].iter().sum();
                            row[num_states - 1] = 1.0 - tail;
                            row
                        })
                        .clone()
                })
                .collect()
        })
        .collect();

    let initial_dist = vec![1.0 / num_states as f64; num_states];
    let mut spec = GameSpec {
        num_players,
        num_states,
        num_actions: shape,
        discount: vec![discount; num_players],
        cost,
        kernel,
        initial_dist,
    };
    let tail: f64 = spec.initial_dist[..num_states - 1].iter().sum();
    spec.initial_dist[num_states - 1] = 1.0 - tail;
    spec.validate().expect("random symmetric game is well formed")
}

/// Random single-player MDP with a full-support kernel, as a one-player game.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize, discount: f64) -> Game {
    random_symmetric_game(rng, 1, num_states, num_actions, discount, 0.05)
}

/// All joint actions in row-major order.
pub fn joint_actions(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0; shape.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for p in (0..shape.len()).rev() {
            cur[p] += 1;
            if cur[p] < shape[p] {
                break;
            }
            cur[p] = 0;
        }
    }
    out
}

fn counts(actions: &[usize], num_actions: usize) -> Vec<usize> {
    let mut c = vec![0; num_actions];
    for &a in actions {
        c[a] += 1;
    }
    c
}
