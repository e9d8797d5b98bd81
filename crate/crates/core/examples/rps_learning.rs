//! Independent learners on rock-paper-scissors: a short run and its
//! equilibrium-frequency curve.
//!
//! cargo run --release --example rps_learning

use symga::config::ConfigFile;
use symga::experiment::{self, PhaseLengths};
use symga::games;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = games::rock_paper_scissors(0.0);
    let cfg = ConfigFile {
        resolution: Some(10),
        eps: Some(0.2),
        phases: Some(100),
        phase_length: Some(PhaseLengths::Constant(2000)),
        trials: Some(8),
        seed: Some(7),
        auto_delta: Some(true),
        ..Default::default()
    }
    .resolve(&game)?;
    println!("delta = {:.4}", cfg.learner.delta);
    let results = experiment::run_experiment(&game, &cfg)?;
    let curve = experiment::aggregate_trials(&results)?;
    for p in curve.iter().step_by(10) {
        println!("phase {:3}: {:.3} ± {:.3}", p.phase, p.mean, p.stderr);
    }
    for r in &results {
        println!("trial {} final policies {:?}", r.trial, r.final_policy);
    }
    Ok(())
}
