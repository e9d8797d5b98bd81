//! Write the built-in games as JSON game files.
//!
//! cargo run --example export_games -- examples/data

use std::path::PathBuf;

use symga::games;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "examples/data".into()));
    std::fs::create_dir_all(&dir)?;
    let files = [
        ("rps.json", games::rock_paper_scissors_spec(0.0)),
        ("two_state.json", games::uniform_two_state()),
        ("matching3.json", games::matching_game(3, 2).spec().clone()),
    ];
    for (name, spec) in files {
        let path = dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(&spec)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
