//! Per-agent learning: Q-factor and value estimates, the satisfaction test,
//! the policy update rules and the satisficing revision step.
//!
//! A learner only ever sees its own [`LocalObservation`]s; nothing in this
//! module takes other players' actions or policies, except the oracle update
//! rule which reads exact values from the game.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{sample_categorical, Game, LocalObservation};
use crate::policy::{GridPolicy, JointPolicy, QuantizedPolicySet, StationaryPolicy};
use crate::solver::{induce_mdp, solve_q_star, QFunction};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("{field} = {value} is out of range: {expected}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// Step size as a function of the within-phase visit count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSchedule {
    /// `1 / (n + 1)`
    #[default]
    Harmonic,
    /// `1 / (n + 1)^exponent`, square-summable for exponents in `(1/2, 1]`.
    Power { exponent: f64 },
    /// Fixed step; not square-summable, for testing.
    Constant { alpha: f64 },
}

impl StepSchedule {
    #[inline]
    pub fn step(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::Harmonic => 1.0 / (n as f64 + 1.0),
            StepSchedule::Power { exponent } => (n as f64 + 1.0).powf(-exponent),
            StepSchedule::Constant { alpha } => alpha,
        }
    }
}

/// Which end of the Q row the update rule moves toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Lowest cost; consistent with cost minimization.
    #[default]
    Min,
    /// Highest value, as printed in the reward-maximizing original rule.
    Max,
}

impl Objective {
    /// Greedy action of a Q row, ties to the lowest index.
    pub fn greedy(&self, row: &[f64]) -> usize {
        let mut best = 0;
        for (u, &v) in row.iter().enumerate().skip(1) {
            let better = match self {
                Objective::Min => v < row[best],
                Objective::Max => v > row[best],
            };
            if better {
                best = u;
            }
        }
        best
    }
}

/// Closed interval every estimate is clamped to at the end of a phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBox {
    pub lo: f64,
    pub hi: f64,
}

impl ValueBox {
    /// `[-c_max/(1-b) - 1, c_max/(1-b) + 1]` for `player`.
    pub fn default_for(game: &Game, player: usize) -> Self {
        let b = game.value_bound(player) + 1.0;
        Self { lo: -b, hi: b }
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    /// Action experimentation probability.
    pub rho: f64,
    /// Probability of a uniform random policy when unsatisfied.
    pub e: f64,
    /// Step of the update rule.
    pub eta: f64,
    /// Tolerance added to ε in the satisfaction test.
    pub delta: f64,
    pub eps: f64,
    #[serde(default)]
    pub schedule: StepSchedule,
    #[serde(default)]
    pub objective: Objective,
    /// Clamp interval for Q; defaults to [`ValueBox::default_for`].
    #[serde(default)]
    pub q_box: Option<ValueBox>,
    #[serde(default)]
    pub j_box: Option<ValueBox>,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            rho: 0.05,
            e: 0.1,
            eta: 0.2,
            delta: 0.005,
            eps: 0.2,
            schedule: StepSchedule::Harmonic,
            objective: Objective::Min,
            q_box: None,
            j_box: None,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let check = |ok: bool, field, value, expected| {
            if ok {
                Ok(())
            } else {
                Err(LearnerError::OutOfRange { field, value, expected })
            }
        };
        check((0.0..1.0).contains(&self.rho), "rho", self.rho, "[0, 1)")?;
        check((0.0..=1.0).contains(&self.e), "e", self.e, "[0, 1]")?;
        check(self.eta > 0.0 && self.eta.is_finite(), "eta", self.eta, "> 0")?;
        check(self.delta > 0.0 && self.delta.is_finite(), "delta", self.delta, "> 0")?;
        check(self.eps >= 0.0 && self.eps.is_finite(), "eps", self.eps, ">= 0")?;
        match self.schedule {
            StepSchedule::Power { exponent } => {
                check(exponent > 0.5 && exponent <= 1.0, "schedule.exponent", exponent, "(0.5, 1]")?
            }
            StepSchedule::Constant { alpha } => check(alpha > 0.0 && alpha <= 1.0, "schedule.alpha", alpha, "(0, 1]")?,
            StepSchedule::Harmonic => {}
        }
        for (field, b) in [("q_box", self.q_box), ("j_box", self.j_box)] {
            if let Some(b) = b {
                check(b.lo <= b.hi, field, b.lo, "lo <= hi")?;
            }
        }
        Ok(())
    }
}

/// Q-factor estimates with within-phase visit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: QFunction,
    pub visits: Vec<u64>,
}

impl QTable {
    pub fn new(values: QFunction) -> Self {
        let visits = vec![0; values.values().len()];
        Self { values, visits }
    }

    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::new(QFunction::filled(num_states, num_actions, 0.0))
    }

    /// `Q(x,u) <- (1 - a_n) Q(x,u) + a_n [c + b min_v Q(x', v)]` where `n`
    /// counts earlier visits to `(x, u)` in this phase.
    pub fn update(&mut self, obs: &LocalObservation, discount: f64, schedule: &StepSchedule) {
        let k = obs.state * self.values.num_actions() + obs.action;
        let alpha = schedule.step(self.visits[k]);
        let target = obs.cost + discount * self.values.min(obs.next_state);
        let old = self.values.get(obs.state, obs.action);
        self.values.set(obs.state, obs.action, (1.0 - alpha) * old + alpha * target);
        self.visits[k] += 1;
    }

    pub fn reset(&mut self, bounds: &ValueBox) {
        for v in self.values.values_mut() {
            *v = bounds.clamp(*v);
        }
        self.visits.fill(0);
    }
}

/// State-value estimates with within-phase visit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JTable {
    pub values: Vec<f64>,
    pub visits: Vec<u64>,
}

impl JTable {
    pub fn new(values: Vec<f64>) -> Self {
        let visits = vec![0; values.len()];
        Self { values, visits }
    }

    pub fn zeros(num_states: usize) -> Self {
        Self::new(vec![0.0; num_states])
    }

    /// `J(x) <- (1 - a_m) J(x) + a_m [c + b J(x')]`.
    pub fn update(&mut self, obs: &LocalObservation, discount: f64, schedule: &StepSchedule) {
        let alpha = schedule.step(self.visits[obs.state]);
        let target = obs.cost + discount * self.values[obs.next_state];
        let x = obs.state;
        self.values[x] = (1.0 - alpha) * self.values[x] + alpha * target;
        self.visits[x] += 1;
    }

    pub fn reset(&mut self, bounds: &ValueBox) {
        for v in &mut self.values {
            *v = bounds.clamp(*v);
        }
        self.visits.fill(0);
    }
}

/// `J(x) <= min_u Q(x, u) + eps + delta` at every state.
pub fn satisfaction_test(j: &JTable, q: &QTable, eps: f64, delta: f64) -> bool {
    j.values
        .iter()
        .enumerate()
        .all(|(x, &jx)| jx <= q.values.min(x) + eps + delta)
}

/// Move up to `eta` probability mass of one row onto the greedy action.
///
/// Each other action gives up `min(p(u), eta / (|U| - 1))`; the greedy
/// action receives the total, so the row still sums to one.
pub fn shifted_row(old: &[f64], q_row: &[f64], eta: f64, objective: Objective) -> Vec<f64> {
    let k = old.len();
    let cap = if k > 1 { eta / (k - 1) as f64 } else { 0.0 };
    let greedy = objective.greedy(q_row);
    let give: Vec<f64> = old.iter().map(|&p| p.min(cap)).collect();
    let gain: f64 = give.iter().enumerate().filter(|&(u, _)| u != greedy).map(|(_, g)| g).sum();
    old.iter()
        .enumerate()
        .map(|(u, &p)| if u == greedy { p + gain } else { p - give[u] })
        .collect()
}

/// Shift every row of `old` toward the greedy action of `q`.
pub fn mid_policy(old: &StationaryPolicy, q: &QFunction, eta: f64, objective: Objective) -> StationaryPolicy {
    let rows = (0..old.num_states())
        .map(|x| shifted_row(old.row(x), q.row(x), eta, objective))
        .collect();
    StationaryPolicy::new(rows).expect("shifted rows stay on the simplex")
}

/// Update rule driven by estimated Q-factors: shift toward the greedy action
/// and project back onto the grid.
pub fn independent_update_rule(
    old: &GridPolicy,
    q: &QFunction,
    eta: f64,
    objective: Objective,
    grid: &QuantizedPolicySet,
) -> GridPolicy {
    grid.project(&mid_policy(&grid.to_policy(old), q, eta, objective))
}

/// The same rule driven by the exact optimal Q-factors of the MDP player
/// `player` faces under `joint`.
pub fn oracle_update_rule(
    game: &Game,
    joint: &JointPolicy,
    player: usize,
    eta: f64,
    objective: Objective,
    grid: &QuantizedPolicySet,
    tol: f64,
) -> GridPolicy {
    let q = solve_q_star(&induce_mdp(game, player, joint), tol);
    let old = grid
        .locate(joint.player(player))
        .expect("player's policy is a grid member");
    independent_update_rule(&old, &q, eta, objective, grid)
}

/// Satisficing revision: keep `current` when satisfied; otherwise draw a
/// uniform grid policy with probability `e`, else take `update()`.
pub fn policy_revision<R: Rng + ?Sized>(
    rng: &mut R,
    current: &GridPolicy,
    satisfied: bool,
    e: f64,
    grid: &QuantizedPolicySet,
    update: impl FnOnce() -> GridPolicy,
) -> GridPolicy {
    if satisfied {
        return current.clone();
    }
    if rng.random::<f64>() < e {
        grid.uniform_draw(rng)
    } else {
        update()
    }
}

/// What a learner did at the end of a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseOutcome {
    pub satisfied: bool,
    pub changed: bool,
}

/// Everything one independent learner owns.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub params: LearnerParams,
    pub discount: f64,
    pub policy: GridPolicy,
    pub q: QTable,
    pub j: JTable,
    q_box: ValueBox,
    j_box: ValueBox,
    behavior: StationaryPolicy,
    rng: ChaCha8Rng,
}

impl LearnerState {
    /// Learner for `player` starting from `policy`, with zero estimates.
    pub fn new(
        game: &Game,
        player: usize,
        grid: &QuantizedPolicySet,
        params: LearnerParams,
        policy: GridPolicy,
        rng: ChaCha8Rng,
    ) -> Self {
        let default_box = ValueBox::default_for(game, player);
        let q_box = params.q_box.unwrap_or(default_box);
        let j_box = params.j_box.unwrap_or(default_box);
        let behavior = grid.to_policy(&policy).perturb(params.rho);
        Self {
            discount: game.discount(player),
            q: QTable::zeros(game.num_states(), game.num_actions(player)),
            j: JTable::zeros(game.num_states()),
            params,
            policy,
            q_box,
            j_box,
            behavior,
            rng,
        }
    }

    /// Draw an action from the perturbed baseline policy.
    pub fn act(&mut self, state: usize) -> usize {
        sample_categorical(&mut self.rng, self.behavior.row(state))
    }

    pub fn observe(&mut self, obs: &LocalObservation) {
        self.q.update(obs, self.discount, &self.params.schedule);
        self.j.update(obs, self.discount, &self.params.schedule);
    }

    pub fn satisfied(&self) -> bool {
        satisfaction_test(&self.j, &self.q, self.params.eps, self.params.delta)
    }

    /// Satisfaction test, revision, then reset of the estimates.
    pub fn end_of_phase(&mut self, grid: &QuantizedPolicySet) -> PhaseOutcome {
        let satisfied = self.satisfied();
        let p = &self.params;
        let (q, policy) = (&self.q.values, &self.policy);
        let next = policy_revision(&mut self.rng, policy, satisfied, p.e, grid, || {
            independent_update_rule(policy, q, p.eta, p.objective, grid)
        });
        let changed = next != self.policy;
        if changed {
            self.behavior = grid.to_policy(&next).perturb(self.params.rho);
            self.policy = next;
        }
        self.reset_estimates();
        PhaseOutcome { satisfied, changed }
    }

    pub fn reset_estimates(&mut self) {
        self.q.reset(&self.q_box);
        self.j.reset(&self.j_box);
    }

    pub fn q_box(&self) -> ValueBox {
        self.q_box
    }

    pub fn j_box(&self) -> ValueBox {
        self.j_box
    }
}
