//! Experiment orchestration: exploration phases, synchronous end-of-phase
//! revisions, multi-trial runs, the oracle revision chain and frequency
//! curves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Game;
use crate::learner::{
    oracle_update_rule, policy_revision, LearnerError, LearnerParams, LearnerState, Objective, PhaseOutcome,
};
use crate::policy::{GridPolicy, JointGridPolicy, PolicyError, QuantizedPolicySet};
use crate::seeding;
use crate::solver::{induce_mdp, solve_q_star, BoundaryRule, GapOracle, IndeterminateMargin};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("{field} is out of range: {detail}")]
    Range { field: String, detail: String },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Indeterminate(#[from] IndeterminateMargin),
    #[error("trial {trial} has {found} phases, expected {expected}")]
    ShapeMismatch { trial: usize, expected: usize, found: usize },
}

fn range_err(field: &str, detail: impl Into<String>) -> ExperimentError {
    ExperimentError::Range {
        field: field.into(),
        detail: detail.into(),
    }
}

/// Exploration-phase lengths: one constant, or an explicit list whose last
/// entry repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseLengths {
    Constant(u64),
    Schedule(Vec<u64>),
}

impl PhaseLengths {
    pub fn length(&self, phase: usize) -> u64 {
        match self {
            PhaseLengths::Constant(t) => *t,
            PhaseLengths::Schedule(ts) => ts[phase.min(ts.len() - 1)],
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let ok = match self {
            PhaseLengths::Constant(t) => *t >= 1,
            PhaseLengths::Schedule(ts) => !ts.is_empty() && ts.iter().all(|&t| t >= 1),
        };
        ok.then_some(()).ok_or_else(|| range_err("phase_length", "every phase needs at least one stage"))
    }
}

fn default_stride() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-10
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Grid resolution `m`.
    pub resolution: u32,
    pub phases: usize,
    pub phase_length: PhaseLengths,
    pub trials: usize,
    pub seed: u64,
    /// Parameters shared by every player unless `per_player` is set.
    pub learner: LearnerParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_player: Vec<LearnerParams>,
    /// Check the baseline policy against the exact ε-equilibrium set every
    /// `eval_stride` phases; 0 disables the check.
    #[serde(default = "default_stride")]
    pub eval_stride: usize,
    /// Solver accuracy for offline checks.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Starting baseline policies; drawn uniformly from the grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<JointGridPolicy>,
    /// Record the sup-norm error of each learner's phase-end Q table.
    #[serde(default)]
    pub q_diagnostics: bool,
}

impl ExperimentConfig {
    pub fn params(&self, player: usize) -> &LearnerParams {
        self.per_player.get(player).unwrap_or(&self.learner)
    }

    pub fn validate(&self, game: &Game) -> Result<(), ExperimentError> {
        if self.resolution == 0 {
            return Err(range_err("resolution", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(range_err("trials", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(range_err("tol", "must be positive"));
        }
        self.phase_length.validate()?;
        if !self.per_player.is_empty() && self.per_player.len() != game.num_players() {
            return Err(range_err(
                "per_player",
                format!("{} entries for {} players", self.per_player.len(), game.num_players()),
            ));
        }
        self.learner.validate()?;
        for p in &self.per_player {
            p.validate()?;
        }
        for i in 1..game.num_players() {
            if game.num_actions(i) != game.num_actions(0) {
                return Err(range_err("game", "players need equal action counts to share a grid"));
            }
        }
        if let Some(init) = &self.initial {
            let grid = QuantizedPolicySet::new(game.num_actions(0), game.num_states(), self.resolution)?;
            let ok = init.len() == game.num_players()
                && init
                    .iter()
                    .all(|gp| gp.0.len() == game.num_states() && gp.0.iter().all(|&k| k < grid.num_points()));
            if !ok {
                return Err(range_err("initial", "not a joint grid policy of this game"));
            }
        }
        Ok(())
    }

    pub fn grid(&self, game: &Game) -> Result<QuantizedPolicySet, ExperimentError> {
        Ok(QuantizedPolicySet::new(game.num_actions(0), game.num_states(), self.resolution)?)
    }
}

/// One exploration phase of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub phase: usize,
    /// Baseline policies in force during the phase.
    pub policies: JointGridPolicy,
    pub policy_ids: Vec<u64>,
    /// Phase-end satisfaction of each learner.
    pub satisfied: Vec<bool>,
    /// Exact ε-equilibrium check of the baseline, when evaluated.
    pub is_eq: Option<bool>,
    pub stages: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_error: Option<Vec<f64>>,
}

impl PhaseLog {
    pub fn satisfied_bitmask(&self) -> u64 {
        self.satisfied
            .iter()
            .enumerate()
            .fold(0, |m, (i, &s)| m | ((s as u64) << i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub phases: Vec<PhaseLog>,
    pub final_policy: JointGridPolicy,
}

impl TrialResult {
    pub fn eq_flags(&self) -> Vec<Option<bool>> {
        self.phases.iter().map(|p| p.is_eq).collect()
    }
}

/// Play `length` stage games from `state` with every learner acting on its
/// perturbed baseline and updating on its own observation. Returns the
/// number of stages played.
pub fn run_exploration_phase(
    game: &Game,
    learners: &mut [LearnerState],
    length: u64,
    state: &mut usize,
    env: &mut ChaCha8Rng,
) -> u64 {
    let mut actions = vec![0; learners.len()];
    for _ in 0..length {
        for (a, l) in actions.iter_mut().zip(learners.iter_mut()) {
            *a = l.act(*state);
        }
        let outcome = game.play_stage(env, *state, &actions);
        for (i, l) in learners.iter_mut().enumerate() {
            l.observe(&outcome.observation_for(i));
        }
        *state = outcome.next_state;
    }
    length
}

/// Synchronous baseline update: every learner tests satisfaction on its own
/// tables, revises, then resets its estimates.
pub fn end_of_phase_update(learners: &mut [LearnerState], grid: &QuantizedPolicySet) -> Vec<PhaseOutcome> {
    learners.iter_mut().map(|l| l.end_of_phase(grid)).collect()
}

fn initial_learners(
    game: &Game,
    grid: &QuantizedPolicySet,
    config: &ExperimentConfig,
    seed: u64,
) -> Vec<LearnerState> {
    (0..game.num_players())
        .map(|i| {
            let mut rng = seeding::agent_rng(seed, i);
            let policy = match &config.initial {
                Some(init) => init[i].clone(),
                None => grid.uniform_draw(&mut rng),
            };
            LearnerState::new(game, i, grid, config.params(i).clone(), policy, rng)
        })
        .collect()
}

fn joint_eps(config: &ExperimentConfig, n: usize) -> f64 {
    // players may carry different eps; the joint check uses the largest
    (0..n).map(|i| config.params(i).eps).fold(0.0, f64::max)
}

/// Run one trial with the seed derived from `trial` and the master seed.
pub fn run_trial(game: &Game, config: &ExperimentConfig, trial: usize) -> Result<TrialResult, ExperimentError> {
    config.validate(game)?;
    let grid = config.grid(game)?;
    let seed = seeding::trial_seed(config.seed, trial as u64);
    let n = game.num_players();
    let mut env = seeding::environment_rng(seed);
    let mut learners = initial_learners(game, &grid, config, seed);
    let mut state = game.sample_initial_state(&mut env);
    let oracle = GapOracle::new(game, config.tol);
    let eps = joint_eps(config, n);

    let mut phases = Vec::with_capacity(config.phases);
    for k in 0..config.phases {
        let policies: JointGridPolicy = learners.iter().map(|l| l.policy.clone()).collect();
        let stages = run_exploration_phase(game, &mut learners, config.phase_length.length(k), &mut state, &mut env);
        let joint = grid.to_joint_policy(&policies);
        let q_error = config.q_diagnostics.then(|| {
            learners
                .iter()
                .enumerate()
                .map(|(i, l)| l.q.values.sup_distance(&solve_q_star(&induce_mdp(game, i, &joint), config.tol)))
                .collect()
        });
        let outcomes = end_of_phase_update(&mut learners, &grid);
        let is_eq = (config.eval_stride > 0 && k % config.eval_stride == 0).then(|| oracle.is_equilibrium(&joint, eps));
        phases.push(PhaseLog {
            phase: k,
            policy_ids: policies.iter().map(|p| grid.policy_id(p)).collect(),
            policies,
            satisfied: outcomes.iter().map(|o| o.satisfied).collect(),
            is_eq,
            stages,
            q_error,
        });
    }
    Ok(TrialResult {
        trial,
        seed,
        phases,
        final_policy: learners.into_iter().map(|l| l.policy).collect(),
    })
}

/// Run every trial, in parallel, returning results in trial order.
pub fn run_experiment(game: &Game, config: &ExperimentConfig) -> Result<Vec<TrialResult>, ExperimentError> {
    config.validate(game)?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(game, config, t))
        .collect()
}

/// Parameters of the oracle revision chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub eps: f64,
    pub e: f64,
    pub eta: f64,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub boundary: BoundaryRule,
    pub tol: f64,
}

/// One transition of the oracle chain: satisfied players keep their
/// policies, the others revise with exact Q-factors. Players draw from `rng`
/// in index order.
pub fn oracle_step<R: Rng + ?Sized>(
    oracle: &GapOracle<'_>,
    grid: &QuantizedPolicySet,
    params: &OracleParams,
    current: &JointGridPolicy,
    rng: &mut R,
) -> Result<JointGridPolicy, IndeterminateMargin> {
    let game = oracle.game();
    let joint = grid.to_joint_policy(current);
    let sat = oracle.satisfaction(&joint, params.eps, params.boundary)?;
    Ok((0..game.num_players())
        .map(|i| {
            policy_revision(rng, &current[i], sat[i], params.e, grid, || {
                oracle_update_rule(game, &joint, i, params.eta, params.objective, grid, params.tol)
            })
        })
        .collect())
}

/// Simulate `steps` transitions of the oracle chain from `start`. The
/// returned sequence has `steps + 1` entries.
pub fn run_oracle_process<R: Rng + ?Sized>(
    oracle: &GapOracle<'_>,
    grid: &QuantizedPolicySet,
    params: &OracleParams,
    start: JointGridPolicy,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<JointGridPolicy>, IndeterminateMargin> {
    let mut seq = Vec::with_capacity(steps + 1);
    seq.push(start);
    for _ in 0..steps {
        let next = oracle_step(oracle, grid, params, seq.last().expect("nonempty"), rng)?;
        seq.push(next);
    }
    Ok(seq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub trajectories: usize,
    pub steps: usize,
    pub absorbed: usize,
    pub absorbed_fraction: f64,
    /// Visits to a non-equilibrium after the first equilibrium visit.
    pub departures: usize,
    /// Mean first step at which an equilibrium was visited, over absorbed
    /// trajectories.
    pub mean_hitting_time: Option<f64>,
    pub equilibria: usize,
    pub joint_policies: u64,
}

/// Run `trajectories` oracle chains from uniform random joint starts and
/// measure absorption into the ε-equilibrium set.
pub fn oracle_absorption(
    game: &Game,
    grid: &QuantizedPolicySet,
    params: &OracleParams,
    trajectories: usize,
    steps: usize,
    seed: u64,
) -> Result<AbsorptionReport, ExperimentError> {
    let n = game.num_players();
    let count = grid.checked_joint_count(n, crate::policy::DEFAULT_ENUMERATION_CAP)?;
    let hits: Vec<Result<(Option<usize>, usize), IndeterminateMargin>> = (0..trajectories)
        .into_par_iter()
        .map_init(
            || GapOracle::new(game, params.tol),
            |oracle, t| {
                let mut rng = seeding::environment_rng(seeding::trial_seed(seed, t as u64));
                let start: JointGridPolicy = (0..n).map(|_| grid.uniform_draw(&mut rng)).collect();
                let seq = run_oracle_process(oracle, grid, params, start, steps, &mut rng)?;
                let flags: Vec<bool> = seq
                    .iter()
                    .map(|jg| oracle.is_equilibrium(&grid.to_joint_policy(jg), params.eps))
                    .collect();
                let first = flags.iter().position(|&f| f);
                let departures = first.map_or(0, |f| flags[f..].iter().filter(|&&b| !b).count());
                Ok((first, departures))
            },
        )
        .collect();
    let equilibria = {
        let oracle = GapOracle::new(game, params.tol);
        (0..count)
            .filter(|&id| oracle.is_equilibrium(&grid.to_joint_policy(&grid.joint_from_id(n, id)), params.eps))
            .count()
    };
    let mut absorbed = 0;
    let mut departures = 0;
    let mut total_time = 0usize;
    for h in hits {
        let (first, d) = h?;
        departures += d;
        if let Some(f) = first {
            absorbed += 1;
            total_time += f;
        }
    }
    Ok(AbsorptionReport {
        trajectories,
        steps,
        absorbed,
        absorbed_fraction: absorbed as f64 / trajectories.max(1) as f64,
        departures,
        mean_hitting_time: (absorbed > 0).then(|| total_time as f64 / absorbed as f64),
        equilibria,
        joint_policies: count,
    })
}

/// One point of an equilibrium-frequency curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub phase: usize,
    pub mean: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    pub samples: usize,
}

/// Pointwise mean of equilibrium flags across trials. Phases with no
/// evaluated flag are skipped.
pub fn aggregate_flags(flags: &[Vec<Option<bool>>]) -> Result<Vec<FrequencyPoint>, ExperimentError> {
    let Some(first) = flags.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if let Some((trial, f)) = flags.iter().enumerate().find(|(_, f)| f.len() != len) {
        return Err(ExperimentError::ShapeMismatch {
            trial,
            expected: len,
            found: f.len(),
        });
    }
    Ok((0..len)
        .filter_map(|k| {
            let seen: Vec<bool> = flags.iter().filter_map(|f| f[k]).collect();
            if seen.is_empty() {
                return None;
            }
            let n = seen.len() as f64;
            let p = seen.iter().filter(|&&b| b).count() as f64 / n;
            Some(FrequencyPoint {
                phase: k,
                mean: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
                samples: seen.len(),
            })
        })
        .collect())
}

pub fn aggregate_trials(results: &[TrialResult]) -> Result<Vec<FrequencyPoint>, ExperimentError> {
    aggregate_flags(&results.iter().map(TrialResult::eq_flags).collect::<Vec<_>>())
}

/// Mean of `curve` over phases in `[from, to)`.
pub fn window_mean(curve: &[FrequencyPoint], from: usize, to: usize) -> Option<f64> {
    let pts: Vec<f64> = curve
        .iter()
        .filter(|p| p.phase >= from && p.phase < to)
        .map(|p| p.mean)
        .collect();
    (!pts.is_empty()).then(|| pts.iter().sum::<f64>() / pts.len() as f64)
}

/// Iterate `y <- u y + p (1 - y)` `k` times from `y0`.
pub fn recursion_oracle(u: f64, p: f64, y0: f64, k: u64) -> f64 {
    (0..k).fold(y0, |y, _| u * y + p * (1.0 - y))
}

/// Fixed point `p / (1 - u + p)` of [`recursion_oracle`].
pub fn recursion_limit(u: f64, p: f64) -> f64 {
    p / (1.0 - u + p)
}

/// Grid policy of each learner, for logging.
pub fn baseline(learners: &[LearnerState]) -> Vec<GridPolicy> {
    learners.iter().map(|l| l.policy.clone()).collect()
}
