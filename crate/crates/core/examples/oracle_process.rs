//! The revision chain driven by exact Q-factors, and its absorption.

use symga::experiment::{self, OracleParams};
use symga::games;
use symga::policy::QuantizedPolicySet;
use symga::solver::BoundaryRule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = games::matching_game(3, 2);
    let grid = QuantizedPolicySet::new(2, 1, 2)?;
    let params = OracleParams {
        eps: 0.1,
        e: 0.3,
        eta: 0.2,
        objective: Default::default(),
        boundary: BoundaryRule::Abort,
        tol: 1e-10,
    };
    let r = experiment::oracle_absorption(&game, &grid, &params, 200, 100, 42)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
