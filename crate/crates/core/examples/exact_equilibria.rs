//! Exact gaps, best-response certificates and the equilibrium set of a grid.

use symga::games;
use symga::policy::{JointPolicy, QuantizedPolicySet, StationaryPolicy};
use symga::solver::{self, JointGaps};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rps = games::rock_paper_scissors(0.0);
    let uniform = JointPolicy(vec![StationaryPolicy::uniform(1, 3); 2]);
    let rock = JointPolicy(vec![StationaryPolicy::deterministic(3, &[0]); 2]);
    for (name, joint) in [("uniform", &uniform), ("rock-rock", &rock)] {
        let gaps = JointGaps::compute(&rps, joint, 1e-10);
        println!(
            "{name}: gaps {:.3} / {:.3}, 0.2-equilibrium {}",
            gaps.worst(0),
            gaps.worst(1),
            solver::is_eps_equilibrium(&rps, joint, 0.2, 1e-10)
        );
    }
    let grid = QuantizedPolicySet::new(3, 1, 10)?;
    let eq = solver::find_quantized_equilibria(&rps, &grid, 0.2, 1e-10)?;
    println!("{} of {} joint grid policies are 0.2-equilibria", eq.len(), grid.joint_count(2));
    Ok(())
}
