//! Build an ε-revision path into the equilibrium set and validate it.

use symga::games;
use symga::policy::{JointPolicy, QuantizedPolicySet, StationaryPolicy};
use symga::revision;
use symga::solver::BoundaryRule;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rps = games::rock_paper_scissors(0.0);
    let grid = QuantizedPolicySet::new(3, 1, 10)?;
    let (eps, tol) = (0.2, 1e-10);
    // exact ties at 0.2 on this grid count as satisfied
    let rule = BoundaryRule::Satisfied;
    let target = revision::first_equilibrium(&rps, &grid, eps, tol)?.expect("equilibria exist");
    let start = JointPolicy(vec![
        StationaryPolicy::deterministic(3, &[0]),
        StationaryPolicy::deterministic(3, &[1]),
    ]);
    let path = revision::construct_symmetric_path(&rps, &start, eps, &target, tol, rule)?;
    for (k, step) in path.steps.iter().enumerate() {
        let rows: Vec<_> = step.0.iter().map(|p| p.to_rows()[0].clone()).collect();
        println!("step {k}: {rows:?}");
    }
    let check = revision::is_valid_revision_path(&rps, &path, tol, rule)?;
    println!("valid {}, ends at equilibrium {}", check.valid, check.terminal_is_eq);

    let report = revision::has_revision_paths_property(&games::matching_game(3, 2), &QuantizedPolicySet::new(2, 1, 2)?, 0.1, tol, BoundaryRule::Abort)?;
    println!("3-player matching game, half grid: {} starts, property holds {}, longest path {}", report.starts, report.holds, report.max_length);
    Ok(())
}
