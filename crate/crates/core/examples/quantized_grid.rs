//! Enumerate a quantized policy grid and project a policy onto it.

use symga::policy::{QuantizedPolicySet, StationaryPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // three actions, one state, probabilities in quarters
    let grid = QuantizedPolicySet::new(3, 1, 4)?;
    println!("{} grid points, {} joint points for two players", grid.num_points(), grid.joint_count(2));
    for k in 0..grid.num_points() {
        println!("  point {k}: {:?}", grid.point(k));
    }
    let p = StationaryPolicy::new(vec![vec![0.3, 0.3, 0.4]])?;
    let g = grid.project(&p);
    println!("[0.3, 0.3, 0.4] projects to id {} = {:?}", grid.policy_id(&g), grid.to_policy(&g).to_rows());
    Ok(())
}
