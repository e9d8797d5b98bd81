//! The `symga` command line.
//!
//! Exit status: 0 on success, 1 on a domain error (bad game file, failed
//! solve, unreadable config), 2 on a usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{load_config, write_sidecar, ConfigFile, LearnerFile};
use crate::experiment::{self, aggregate_flags, OracleParams, PhaseLengths};
use crate::game::{Game, SYMMETRY_TOL};
use crate::learner::Objective;
use crate::policy::{JointPolicy, QuantizedPolicySet};
use crate::report;
use crate::revision;
use crate::solver::{self, BoundaryRule, JointGaps};

#[derive(Debug, Parser)]
#[command(name = "symga", version, about = "Independent learners in symmetric stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a game file is well formed and print its dimensions.
    Validate(GameArg),
    /// Check invariance of costs and transitions under player permutations.
    CheckSymmetry(GameArg),
    /// Report each player's suboptimality for a joint policy, or list all
    /// quantized ε-equilibria.
    CheckEq(CheckEqArgs),
    /// Smallest positive distance between ε and any suboptimality on the grid.
    BarDelta(BarDeltaArgs),
    /// Build an ε-revision path from a start policy into the equilibrium set.
    RevisionPath(RevisionPathArgs),
    /// Build and validate revision paths from every joint grid policy.
    VerifyPaths(GridArgs),
    /// Simulate the oracle revision chain and measure absorption.
    OracleSim(OracleSimArgs),
    /// Run independent learners for several trials and write CSV results.
    Simulate(SimulateArgs),
    /// Recompute the equilibrium-frequency curve from a run CSV.
    Aggregate(AggregateArgs),
    /// Iterate y <- u y + p (1 - y) and compare with its fixed point.
    RecursionCheck(RecursionArgs),
}

#[derive(Debug, Args)]
pub struct GameArg {
    /// Game file (JSON).
    #[arg(long)]
    pub game: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Abort,
    Satisfied,
}

impl From<BoundaryArg> for BoundaryRule {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Abort => BoundaryRule::Abort,
            BoundaryArg::Satisfied => BoundaryRule::Satisfied,
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub game: PathBuf,
    /// Grid resolution m (probabilities in steps of 1/m).
    #[arg(long)]
    pub grid: u32,
    #[arg(long)]
    pub eps: f64,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// How satisfaction margins within solver slack are decided.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Abort)]
    pub boundary: BoundaryArg,
}

#[derive(Debug, Args)]
pub struct CheckEqArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Joint policy as JSON `[[[p, ...], ...], ...]` (player, state, action),
    /// inline or as a file path.
    #[arg(long, conflicts_with = "grid")]
    pub policy: Option<String>,
    /// List every ε-equilibrium on this grid instead.
    #[arg(long)]
    pub grid: Option<u32>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct BarDeltaArgs {
    #[arg(long)]
    pub game: PathBuf,
    #[arg(long)]
    pub grid: u32,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also halve rho from this value until the perturbation bounds hold,
    /// with delta = bar_delta / 2 for every player.
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub max_halvings: u32,
}

#[derive(Debug, Args)]
pub struct RevisionPathArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Start joint policy (JSON, inline or file).
    #[arg(long)]
    pub start: String,
    /// Target ε-equilibrium (JSON); defaults to the lowest-id one on the grid.
    #[arg(long)]
    pub target: Option<String>,
    /// Write the path here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleSimArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0.1)]
    pub e: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long, default_value_t = 500)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Min)]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Min,
    Max,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Min => Objective::Min,
            ObjectiveArg::Max => Objective::Max,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Game file; may also come from the config.
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub phases: Option<usize>,
    #[arg(long)]
    pub phase_len: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub e: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Use delta = bar_delta / 2.
    #[arg(long)]
    pub auto_delta: bool,
    #[arg(long)]
    pub eval_stride: Option<usize>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Per-phase run log.
    #[arg(long)]
    pub out: PathBuf,
    /// Frequency curve; defaults to `freq.csv` beside `--out`.
    #[arg(long)]
    pub freq: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Run CSV written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,
    /// Frequency CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecursionArgs {
    #[arg(long)]
    pub u: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y0: f64,
    #[arg(long)]
    pub k: u64,
}

/// Any failure reported by a subcommand; mapped to exit status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(String);

impl CliError {
    fn msg(m: impl Into<String>) -> Self {
        CliError(m.into())
    }
}

macro_rules! impl_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self { CliError(e.to_string()) }
        }
    )*};
}

impl_from!(
    crate::game::GameError,
    crate::policy::PolicyError,
    crate::solver::SolverError,
    crate::revision::RevisionError,
    crate::experiment::ExperimentError,
    crate::config::ConfigError,
    crate::report::ReportError,
    crate::solver::IndeterminateMargin,
    io::Error,
    serde_json::Error
);

type Out<'a> = &'a mut dyn Write;

/// Parse arguments (exiting with status 2 on usage errors) and run.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    configure_threads();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(cli.command, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Honour `SYMGA_THREADS` as a cap on the worker pool.
fn configure_threads() {
    if let Some(n) = std::env::var("SYMGA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn load_game(path: &Path) -> Result<Game, CliError> {
    Ok(Game::load(path)?)
}

/// Inline JSON, or a path to a JSON file.
fn json_arg<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, CliError> {
    let text = if arg.trim_start().starts_with(['[', '{']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::msg(format!("cannot read {arg}: {e}")))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn grid_for(game: &Game, m: u32) -> Result<QuantizedPolicySet, CliError> {
    Ok(QuantizedPolicySet::new(game.num_actions(0), game.num_states(), m)?)
}

pub fn run(command: Command, out: Out<'_>) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(&a, out),
        Command::CheckSymmetry(a) => check_symmetry(&a, out),
        Command::CheckEq(a) => check_eq(&a, out),
        Command::BarDelta(a) => bar_delta(&a, out),
        Command::RevisionPath(a) => revision_path(&a, out),
        Command::VerifyPaths(a) => verify_paths(&a, out),
        Command::OracleSim(a) => oracle_sim(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Aggregate(a) => aggregate(&a, out),
        Command::RecursionCheck(a) => recursion_check(&a, out),
    }
}

fn validate(a: &GameArg, out: Out<'_>) -> Result<(), CliError> {
    let g = load_game(&a.game)?;
    writeln!(out, "valid: true")?;
    writeln!(out, "players: {}", g.num_players())?;
    writeln!(out, "states: {}", g.num_states())?;
    let actions: Vec<String> = (0..g.num_players()).map(|i| g.num_actions(i).to_string()).collect();
    writeln!(out, "actions: {}", actions.join(","))?;
    writeln!(out, "c_max: {}", report::fmt_float(g.c_max()))?;
    writeln!(out, "strongly_connected: {}", g.check_reachability())?;
    Ok(())
}

fn check_symmetry(a: &GameArg, out: Out<'_>) -> Result<(), CliError> {
    let g = load_game(&a.game)?;
    let r = g.check_symmetry(SYMMETRY_TOL);
    writeln!(out, "symmetric: {}", r.is_symmetric)?;
    if let Some(w) = r.witness {
        writeln!(out, "witness: {w}")?;
    }
    Ok(())
}

fn check_eq(a: &CheckEqArgs, out: Out<'_>) -> Result<(), CliError> {
    let g = load_game(&a.game)?;
    match (&a.policy, a.grid) {
        (Some(p), _) => {
            let joint: JointPolicy = json_arg(p)?;
            if joint.num_players() != g.num_players() {
                return Err(CliError::msg(format!(
                    "policy has {} players, game has {}",
                    joint.num_players(),
                    g.num_players()
                )));
            }
            let gaps = JointGaps::compute(&g, &joint, a.tol);
            let mut all = true;
            for i in 0..g.num_players() {
                let v = solver::classify(a.eps - gaps.worst(i), 2.0 * a.tol);
                let ok = gaps.worst(i) <= a.eps + 2.0 * a.tol;
                all &= ok;
                writeln!(out, "player {i}: gap {} verdict {:?}", report::fmt_float(gaps.worst(i)), v)?;
            }
            writeln!(out, "equilibrium: {all}")?;
        }
        (None, Some(m)) => {
            let grid = grid_for(&g, m)?;
            let eq = solver::find_quantized_equilibria(&g, &grid, a.eps, a.tol)?;
            writeln!(out, "equilibria: {}", eq.len())?;
            for jg in &eq {
                writeln!(out, "{}", serde_json::to_string(&grid.to_joint_policy(jg))?)?;
            }
        }
        (None, None) => return Err(CliError::msg("give --policy or --grid")),
    }
    Ok(())
}

fn bar_delta(a: &BarDeltaArgs, out: Out<'_>) -> Result<(), CliError> {
    let g = load_game(&a.game)?;
    let grid = grid_for(&g, a.grid)?;
    let bd = solver::compute_bar_delta(&g, &grid, a.eps, a.tol)?;
    writeln!(out, "bar_delta: {}", report::fmt_float(bd.bar_delta))?;
    writeln!(out, "distinct_values: {}", bd.profile.len())?;
    if let Some(rho0) = a.rho0 {
        let deltas = vec![bd.bar_delta / 2.0; g.num_players()];
        match solver::search_rho_by_halving(&g, &grid, rho0, &deltas, bd.bar_delta, a.tol, a.max_halvings)? {
            Some(found) => {
                writeln!(out, "rho: {}", report::fmt_float(found.rho))?;
                writeln!(out, "halvings: {}", found.halvings)?;
                writeln!(out, "threshold: {}", report::fmt_float(found.check.threshold))?;
                writeln!(out, "max_q_deviation: {}", report::fmt_float(found.check.max_q_deviation))?;
                writeln!(out, "max_j_deviation: {}", report::fmt_float(found.check.max_j_deviation))?;
            }
            None => return Err(CliError::msg(format!("bounds still fail after {} halvings", a.max_halvings))),
        }
    }
    Ok(())
}

fn revision_path(a: &RevisionPathArgs, out: Out<'_>) -> Result<(), CliError> {
    let ga = &a.grid;
    let g = load_game(&ga.game)?;
    let start: JointPolicy = json_arg(&a.start)?;
    let target = match &a.target {
        Some(t) => json_arg(t)?,
        None => {
            let grid = grid_for(&g, ga.grid)?;
            revision::first_equilibrium(&g, &grid, ga.eps, ga.tol)?.ok_or(revision::RevisionError::NoTargetEquilibrium)?
        }
    };
    let path = revision::construct_symmetric_path(&g, &start, ga.eps, &target, ga.tol, ga.boundary.into())?;
    let check = revision::is_valid_revision_path(&g, &path, ga.tol, ga.boundary.into())?;
    let json = serde_json::to_string_pretty(&path)?;
    match &a.out {
        Some(p) => std::fs::write(p, json)?,
        None => writeln!(out, "{json}")?,
    }
    writeln!(out, "length: {}", path.len())?;
    writeln!(out, "valid: {}", check.valid)?;
    writeln!(out, "terminal_is_eq: {}", check.terminal_is_eq)?;
    Ok(())
}

fn verify_paths(a: &GridArgs, out: Out<'_>) -> Result<(), CliError> {
    let g = load_game(&a.game)?;
    let grid = grid_for(&g, a.grid)?;
    let r = revision::has_revision_paths_property(&g, &grid, a.eps, a.tol, a.boundary.into())?;
    writeln!(out, "holds: {}", r.holds)?;
    writeln!(out, "starts: {}", r.starts)?;
    writeln!(out, "max_length: {}", r.max_length)?;
    writeln!(out, "failures: {}", r.failures.len())?;
    for f in r.failures.iter().take(10) {
        writeln!(out, "  start {}: {}", f.start_id, f.reason)?;
    }
    Ok(())
}

fn oracle_sim(a: &OracleSimArgs, out: Out<'_>) -> Result<(), CliError> {
    let ga = &a.grid;
    let g = load_game(&ga.game)?;
    let grid = grid_for(&g, ga.grid)?;
    let params = OracleParams {
        eps: ga.eps,
        e: a.e,
        eta: a.eta,
        objective: a.objective.into(),
        boundary: ga.boundary.into(),
        tol: ga.tol,
    };
    let r = experiment::oracle_absorption(&g, &grid, &params, a.trajectories, a.steps, a.seed)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
    Ok(())
}

fn simulate(a: &SimulateArgs, out: Out<'_>) -> Result<(), CliError> {
    let base = match &a.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let flags = ConfigFile {
        game: a.game.clone(),
        resolution: a.grid,
        eps: a.eps,
        phases: a.phases,
        phase_length: a.phase_len.map(PhaseLengths::Constant),
        trials: a.trials,
        seed: a.seed,
        learner: LearnerFile {
            rho: a.rho,
            e: a.e,
            eta: a.eta,
            delta: a.delta,
            objective: a.objective.map(Into::into),
            ..Default::default()
        },
        auto_delta: a.auto_delta.then_some(true),
        eval_stride: a.eval_stride,
        ..Default::default()
    };
    let mut file = base.merged(flags);
    if file.learner.delta.is_none() && file.auto_delta.is_none() {
        eprintln!("note: no delta given; using bar_delta / 2");
        file.auto_delta = Some(true);
    }
    let game_path = file.game.clone().ok_or_else(|| CliError::msg("no game given (--game or config `game`)"))?;
    let g = load_game(&game_path)?;
    let cfg = file.resolve(&g)?;
    let results = experiment::run_experiment(&g, &cfg)?;

    report::write_run_csv(BufWriter::new(File::create(&a.out)?), &results, g.num_players())?;
    let curve = experiment::aggregate_trials(&results)?;
    let freq = a
        .freq
        .clone()
        .unwrap_or_else(|| a.out.parent().unwrap_or(Path::new("")).join("freq.csv"));
    report::write_frequency_csv(BufWriter::new(File::create(&freq)?), &curve)?;
    let sidecar = write_sidecar(&a.out, &cfg)?;

    writeln!(out, "delta: {}", report::fmt_float(cfg.learner.delta))?;
    if !curve.is_empty() {
        let last = cfg.phases;
        let tail = experiment::window_mean(&curve, last.saturating_sub(50), last).unwrap_or(f64::NAN);
        writeln!(out, "last_50_mean: {}", report::fmt_float(tail))?;
    }
    writeln!(out, "run: {}", a.out.display())?;
    writeln!(out, "freq: {}", freq.display())?;
    writeln!(out, "config: {}", sidecar.display())?;
    Ok(())
}

fn aggregate(a: &AggregateArgs, out: Out<'_>) -> Result<(), CliError> {
    let flags = report::read_run_flags(File::open(&a.input)?)?;
    let curve = aggregate_flags(&flags)?;
    match &a.out {
        Some(p) => report::write_frequency_csv(BufWriter::new(File::create(p)?), &curve)?,
        None => report::write_frequency_csv(&mut *out, &curve)?,
    }
    Ok(())
}

fn recursion_check(a: &RecursionArgs, out: Out<'_>) -> Result<(), CliError> {
    if !(0.0 < a.p && a.p < a.u && a.u < 1.0) {
        return Err(CliError::msg("need 0 < p < u < 1"));
    }
    if !(0.0..=1.0).contains(&a.y0) {
        return Err(CliError::msg("need y0 in [0, 1]"));
    }
    let y = experiment::recursion_oracle(a.u, a.p, a.y0, a.k);
    let lim = experiment::recursion_limit(a.u, a.p);
    writeln!(out, "{y}")?;
    writeln!(out, "limit: {lim}")?;
    writeln!(out, "error: {}", report::fmt_float((y - lim).abs()))?;
    Ok(())
}
