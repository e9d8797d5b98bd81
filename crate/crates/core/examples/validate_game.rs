//! Load a game file, check it, and test symmetry and reachability.
//!
//! cargo run --example validate_game -- examples/data/rps.json

use symga::game::{Game, SYMMETRY_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "examples/data/rps.json".into());
    let game = Game::load(&path)?;
    println!("{path}: {} players, {} states, {} joint actions", game.num_players(), game.num_states(), game.num_joint_actions());
    let sym = game.check_symmetry(SYMMETRY_TOL);
    println!("symmetric: {}", sym.is_symmetric);
    if let Some(w) = sym.witness {
        println!("  witness: {w}");
    }
    println!("strongly connected: {}", game.check_reachability());
    Ok(())
}
