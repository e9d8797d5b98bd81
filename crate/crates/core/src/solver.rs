//! Exact dynamic-programming layer.
//!
//! Everything here is computed from the game tables, never from samples:
//! the single-agent MDP a player faces when everyone else is frozen, its
//! optimal Q-factors, discounted policy values, and the ε-best-response and
//! ε-equilibrium tests built on the identity
//!
//! ```text
//! pi^i is an eps-best-response to pi^-i  <=>  J^i_x(pi) <= min_u Q*^i(x, u) + eps  for all x
//! ```
//!
//! The scans over quantized joint policies (`find_quantized_equilibria`,
//! `compute_bar_delta`, `verify_rho_bounds`) are parallel over joint-policy
//! ids and merge their results in id order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Game;
use crate::policy::{
    JointGridPolicy, JointPolicy, PolicyError, QuantizedPolicySet, StationaryPolicy, DEFAULT_ENUMERATION_CAP,
};

/// Above this many states policy evaluation switches from a dense linear
/// solve to fixed-point sweeps.
pub const DIRECT_SOLVE_MAX_STATES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("grid has {grid} actions but player {player} has {game}")]
    GridMismatch {
        player: usize,
        grid: usize,
        game: usize,
    },
    #[error("every element of the gap set is zero")]
    AllGapsZero,
    #[error("delta of player {player} is {delta}, must lie in (0, {bar_delta})")]
    DeltaOutOfRange { player: usize, delta: f64, bar_delta: f64 },
    #[error("perturbation rate of player {player} is {rho}, must lie in [0, 1)")]
    RhoOutOfRange { player: usize, rho: f64 },
}

/// The MDP faced by one player while the others follow fixed stationary
/// policies.
#[derive(Debug, Clone)]
pub struct InducedMdp {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    /// `[x][u]`
    cost: Vec<f64>,
    /// `[x][u][x']`
    kernel: Vec<f64>,
}

impl InducedMdp {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    #[inline]
    pub fn cost(&self, x: usize, u: usize) -> f64 {
        self.cost[x * self.num_actions + u]
    }

    #[inline]
    pub fn kernel_row(&self, x: usize, u: usize) -> &[f64] {
        let start = (x * self.num_actions + u) * self.num_states;
        &self.kernel[start..start + self.num_states]
    }

    /// One application of the Bellman optimality operator.
    fn bellman(&self, q: &QFunction, out: &mut QFunction) {
        let v: Vec<f64> = (0..self.num_states).map(|x| q.min(x)).collect();
        for x in 0..self.num_states {
            for u in 0..self.num_actions {
                let ev: f64 = self.kernel_row(x, u).iter().zip(&v).map(|(p, v)| p * v).sum();
                out.values[x * self.num_actions + u] = self.cost(x, u) + self.discount * ev;
            }
        }
    }

    /// Sup-norm distance between `q` and its Bellman image.
    pub fn bellman_residual(&self, q: &QFunction) -> f64 {
        let mut image = q.clone();
        self.bellman(q, &mut image);
        image.sup_distance(q)
    }

    /// Discounted value of `policy` in this MDP.
    pub fn evaluate(&self, policy: &StationaryPolicy, tol: f64) -> ValueFunction {
        let n = self.num_states;
        let mut reward = vec![0.0; n];
        let mut chain = vec![0.0; n * n];
        for x in 0..n {
            for (u, &p) in policy.row(x).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                reward[x] += p * self.cost(x, u);
                for (y, &k) in self.kernel_row(x, u).iter().enumerate() {
                    chain[x * n + y] += p * k;
                }
            }
        }
        solve_markov_reward(&reward, &chain, self.discount, tol, n <= DIRECT_SOLVE_MAX_STATES)
    }
}

/// Build the MDP player `player` faces when every other player `j` follows
/// `joint.player(j)`. The entry for `player` itself is ignored.
pub fn induce_mdp(game: &Game, player: usize, joint: &JointPolicy) -> InducedMdp {
    let n_states = game.num_states();
    let n_actions = game.num_actions(player);
    let mut cost = vec![0.0; n_states * n_actions];
    let mut kernel = vec![0.0; n_states * n_actions * n_states];
    for x in 0..n_states {
        for joint_action in 0..game.num_joint_actions() {
            let mut weight = 1.0;
            for j in 0..game.num_players() {
                if j != player {
                    weight *= joint.player(j).prob(x, game.action_of(joint_action, j));
                    if weight == 0.0 {
                        break;
                    }
                }
            }
            if weight == 0.0 {
                continue;
            }
            let u = game.action_of(joint_action, player);
            cost[x * n_actions + u] += weight * game.cost(player, x, joint_action);
            let base = (x * n_actions + u) * n_states;
            for (y, &p) in game.kernel_row(x, joint_action).iter().enumerate() {
                kernel[base + y] += weight * p;
            }
        }
    }
    InducedMdp {
        num_states: n_states,
        num_actions: n_actions,
        discount: game.discount(player),
        cost,
        kernel,
    }
}

/// State-action values, indexed `[x][u]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunction {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn filled(num_states: usize, num_actions: usize, value: f64) -> Self {
        Self {
            num_states,
            num_actions,
            values: vec![value; num_states * num_actions],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let num_actions = rows.first().map_or(0, Vec::len);
        Self {
            num_states: rows.len(),
            num_actions,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, x: usize, u: usize) -> f64 {
        self.values[x * self.num_actions + u]
    }

    #[inline]
    pub fn set(&mut self, x: usize, u: usize, v: f64) {
        self.values[x * self.num_actions + u] = v;
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.num_actions..(x + 1) * self.num_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn min(&self, x: usize) -> f64 {
        self.row(x).iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Per-state values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Optimal Q-factors by value iteration from zero.
///
/// Stops once successive iterates differ by at most `tol (1 - b) / (2 b)` in
/// sup-norm, which bounds the distance to the fixed point by `tol / 2`. With
/// `b = 0` a single sweep is exact.
pub fn solve_q_star(mdp: &InducedMdp, tol: f64) -> QFunction {
    let mut q = QFunction::filled(mdp.num_states, mdp.num_actions, 0.0);
    let mut next = q.clone();
    let beta = mdp.discount;
    if beta == 0.0 {
        mdp.bellman(&q, &mut next);
        return next;
    }
    let threshold = tol * (1.0 - beta) / (2.0 * beta);
    loop {
        mdp.bellman(&q, &mut next);
        let change = next.sup_distance(&q);
        std::mem::swap(&mut q, &mut next);
        if change <= threshold {
            return q;
        }
    }
}

/// Solve `J = r + beta P J`.
fn solve_markov_reward(reward: &[f64], chain: &[f64], beta: f64, tol: f64, direct: bool) -> ValueFunction {
    let n = reward.len();
    if beta == 0.0 {
        return ValueFunction(reward.to_vec());
    }
    if direct {
        let a = DMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 - beta * chain[i * n + j]);
        let b = DVector::from_column_slice(reward);
        if let Some(sol) = a.lu().solve(&b) {
            return ValueFunction(sol.iter().copied().collect());
        }
    }
    iterate_markov_reward(reward, chain, beta, tol)
}

fn iterate_markov_reward(reward: &[f64], chain: &[f64], beta: f64, tol: f64) -> ValueFunction {
    let n = reward.len();
    let mut j = vec![0.0; n];
    let mut next = vec![0.0; n];
    let threshold = if beta > 0.0 { tol * (1.0 - beta) / (2.0 * beta) } else { f64::INFINITY };
    loop {
        for x in 0..n {
            let ev: f64 = chain[x * n..(x + 1) * n].iter().zip(&j).map(|(p, v)| p * v).sum();
            next[x] = reward[x] + beta * ev;
        }
        let change = next.iter().zip(&j).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut j, &mut next);
        if change <= threshold {
            return ValueFunction(j);
        }
    }
}

fn joint_markov_reward(game: &Game, joint: &JointPolicy, player: usize) -> (Vec<f64>, Vec<f64>) {
    let n = game.num_states();
    let mut reward = vec![0.0; n];
    let mut chain = vec![0.0; n * n];
    for x in 0..n {
        for a in 0..game.num_joint_actions() {
            let w: f64 = (0..game.num_players())
                .map(|j| joint.player(j).prob(x, game.action_of(a, j)))
                .product();
            if w == 0.0 {
                continue;
            }
            reward[x] += w * game.cost(player, x, a);
            for (y, &p) in game.kernel_row(x, a).iter().enumerate() {
                chain[x * n + y] += w * p;
            }
        }
    }
    (reward, chain)
}

/// Discounted cost `J^i_x` of `joint` for `player`, at every state.
pub fn evaluate_policy(game: &Game, joint: &JointPolicy, player: usize, tol: f64) -> ValueFunction {
    let (reward, chain) = joint_markov_reward(game, joint, player);
    let direct = game.num_states() <= DIRECT_SOLVE_MAX_STATES;
    solve_markov_reward(&reward, &chain, game.discount(player), tol, direct)
}

/// Same as [`evaluate_policy`], always by fixed-point sweeps.
pub fn evaluate_policy_iterative(game: &Game, joint: &JointPolicy, player: usize, tol: f64) -> ValueFunction {
    let (reward, chain) = joint_markov_reward(game, joint, player);
    iterate_markov_reward(&reward, &chain, game.discount(player), tol)
}

/// `J^i_x(pi) - min_u Q*^i_{pi^-i}(x, u)` at every state.
pub fn suboptimality(game: &Game, player: usize, joint: &JointPolicy, tol: f64) -> Vec<f64> {
    let mdp = induce_mdp(game, player, joint);
    let q = solve_q_star(&mdp, tol);
    let j = mdp.evaluate(joint.player(player), tol);
    (0..game.num_states()).map(|x| j.0[x] - q.min(x)).collect()
}

/// Outcome of a best-response test whose inputs are only known to solver
/// accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Unsatisfied,
    /// The margin lies within the numerical slack.
    Indeterminate,
}

/// Classify a margin `eps - gap` against a symmetric slack band.
pub fn classify(margin: f64, slack: f64) -> Verdict {
    if margin > slack {
        Verdict::Satisfied
    } else if margin < -slack {
        Verdict::Unsatisfied
    } else {
        Verdict::Indeterminate
    }
}

/// Largest per-state suboptimality.
fn worst(gaps: &[f64]) -> f64 {
    gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// ε-best-response test with slack `2 tol` in favour of acceptance.
pub fn is_eps_best_response(game: &Game, player: usize, joint: &JointPolicy, eps: f64, tol: f64) -> bool {
    worst(&suboptimality(game, player, joint, tol)) <= eps + 2.0 * tol
}

/// Certification form of the ε-best-response test: only margins larger
/// than `2 tol` decide the outcome.
pub fn certify_best_response(game: &Game, player: usize, joint: &JointPolicy, eps: f64, tol: f64) -> Verdict {
    classify(eps - worst(&suboptimality(game, player, joint, tol)), 2.0 * tol)
}

pub fn is_eps_equilibrium(game: &Game, joint: &JointPolicy, eps: f64, tol: f64) -> bool {
    (0..game.num_players()).all(|i| is_eps_best_response(game, i, joint, eps, tol))
}

/// Per-player, per-state suboptimality of one joint policy.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaps {
    /// `[player][state]`
    pub per_state: Vec<Vec<f64>>,
}

impl JointGaps {
    pub fn compute(game: &Game, joint: &JointPolicy, tol: f64) -> Self {
        Self {
            per_state: (0..game.num_players())
                .map(|i| suboptimality(game, i, joint, tol))
                .collect(),
        }
    }

    pub fn worst(&self, player: usize) -> f64 {
        worst(&self.per_state[player])
    }
}

/// A player whose satisfaction could not be decided.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("satisfaction of player {player} is within numerical slack (margin {margin:e})")]
pub struct IndeterminateMargin {
    pub player: usize,
    pub margin: f64,
}

/// What to do with satisfaction margins that fall inside the slack band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryRule {
    /// Report [`IndeterminateMargin`].
    #[default]
    Abort,
    /// Treat the margin as zero, which satisfies the non-strict inequality.
    Satisfied,
}

/// Memoizing source of exact satisfaction information.
///
/// Joint policies are keyed by the bit patterns of their probabilities, so
/// any two equal policies share one solve.
pub struct GapOracle<'a> {
    game: &'a Game,
    tol: f64,
    memo: RefCell<HashMap<Vec<u64>, Rc<JointGaps>>>,
}

impl<'a> GapOracle<'a> {
    pub fn new(game: &'a Game, tol: f64) -> Self {
        Self {
            game,
            tol,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &'a Game {
        self.game
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Slack used when classifying margins.
    pub fn slack(&self) -> f64 {
        2.0 * self.tol
    }

    pub fn gaps(&self, joint: &JointPolicy) -> Rc<JointGaps> {
        let key = joint.bits();
        if let Some(g) = self.memo.borrow().get(&key) {
            return Rc::clone(g);
        }
        let g = Rc::new(JointGaps::compute(self.game, joint, self.tol));
        self.memo.borrow_mut().insert(key, Rc::clone(&g));
        g
    }

    pub fn verdict(&self, joint: &JointPolicy, player: usize, eps: f64) -> Verdict {
        classify(eps - self.gaps(joint).worst(player), self.slack())
    }

    /// Lenient equilibrium test, as [`is_eps_equilibrium`].
    pub fn is_equilibrium(&self, joint: &JointPolicy, eps: f64) -> bool {
        let g = self.gaps(joint);
        (0..self.game.num_players()).all(|i| g.worst(i) <= eps + self.slack())
    }

    /// Which players are ε-best-responding, deciding boundary cases by `rule`.
    pub fn satisfaction(&self, joint: &JointPolicy, eps: f64, rule: BoundaryRule) -> Result<Vec<bool>, IndeterminateMargin> {
        let g = self.gaps(joint);
        (0..self.game.num_players())
            .map(|i| {
                let margin = eps - g.worst(i);
                match (classify(margin, self.slack()), rule) {
                    (Verdict::Satisfied, _) => Ok(true),
                    (Verdict::Unsatisfied, _) => Ok(false),
                    (Verdict::Indeterminate, BoundaryRule::Satisfied) => Ok(true),
                    (Verdict::Indeterminate, BoundaryRule::Abort) => Err(IndeterminateMargin { player: i, margin }),
                }
            })
            .collect()
    }
}

fn check_grid(game: &Game, grid: &QuantizedPolicySet) -> Result<(), SolverError> {
    for player in 0..game.num_players() {
        if game.num_actions(player) != grid.num_actions() || game.num_states() != grid.num_states() {
            return Err(SolverError::GridMismatch {
                player,
                grid: grid.num_actions(),
                game: game.num_actions(player),
            });
        }
    }
    Ok(())
}

/// Parallel map over every joint grid policy, results in id order.
fn scan_joint<T: Send>(
    game: &Game,
    grid: &QuantizedPolicySet,
    cap: u64,
    f: impl Fn(&JointGridPolicy, &JointPolicy) -> T + Sync,
) -> Result<Vec<T>, SolverError> {
    check_grid(game, grid)?;
    let n = game.num_players();
    let count = grid.checked_joint_count(n, cap)?;
    Ok((0..count)
        .into_par_iter()
        .map(|id| {
            let jg = grid.joint_from_id(n, id);
            let jp = grid.to_joint_policy(&jg);
            f(&jg, &jp)
        })
        .collect())
}

/// Every ε-equilibrium in the quantized joint set, in id order.
pub fn find_quantized_equilibria(
    game: &Game,
    grid: &QuantizedPolicySet,
    eps: f64,
    tol: f64,
) -> Result<Vec<JointGridPolicy>, SolverError> {
    find_quantized_equilibria_capped(game, grid, eps, tol, DEFAULT_ENUMERATION_CAP)
}

pub fn find_quantized_equilibria_capped(
    game: &Game,
    grid: &QuantizedPolicySet,
    eps: f64,
    tol: f64,
    cap: u64,
) -> Result<Vec<JointGridPolicy>, SolverError> {
    let hits = scan_joint(game, grid, cap, |jg, jp| {
        is_eps_equilibrium(game, jp, eps, tol).then(|| jg.clone())
    })?;
    Ok(hits.into_iter().flatten().collect())
}

/// The smallest positive distance between ε and any player's suboptimality
/// over the quantized joint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarDelta {
    pub bar_delta: f64,
    pub eps: f64,
    /// Distinct elements of the gap set, ascending; values treated as zero
    /// are reported as 0.
    pub profile: Vec<f64>,
}

/// Compute the minimum positive element of
/// `{ |eps - (J^i_x(pi) - min_u Q*^i_{pi^-i}(x, u))| }` over players,
/// quantized joint policies and states. Elements within `10 tol` of zero
/// count as zero.
pub fn compute_bar_delta(game: &Game, grid: &QuantizedPolicySet, eps: f64, tol: f64) -> Result<BarDelta, SolverError> {
    let zero = 10.0 * tol;
    let per_joint = scan_joint(game, grid, DEFAULT_ENUMERATION_CAP, |_, jp| {
        JointGaps::compute(game, jp, tol)
            .per_state
            .into_iter()
            .flatten()
            .map(|g| {
                let s = (eps - g).abs();
                if s <= zero {
                    0.0
                } else {
                    s
                }
            })
            .collect::<Vec<_>>()
    })?;
    let mut all: Vec<f64> = per_joint.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    // collapse values that agree to solver accuracy
    let mut profile: Vec<f64> = Vec::new();
    for v in all {
        match profile.last() {
            Some(&last) if v - last <= tol => {}
            _ => profile.push(v),
        }
    }
    let bar_delta = profile
        .iter()
        .copied()
        .find(|&v| v > 0.0)
        .ok_or(SolverError::AllGapsZero)?;
    Ok(BarDelta { bar_delta, eps, profile })
}

/// Result of checking the perturbation bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoCheck {
    pub passed: bool,
    /// `min_j { delta^j, bar_delta - delta^j } / 2`
    pub threshold: f64,
    /// Largest `||Q*_{pi^-i} - Q*_{hat pi^-i}||` seen.
    pub max_q_deviation: f64,
    /// Largest `|J^i_x(pi) - J^i_x(hat pi)|` seen.
    pub max_j_deviation: f64,
}

/// Check that perturbing every quantized joint policy by `rho` moves each
/// player's optimal Q-factors and policy values by less than
/// `min_j { delta^j, bar_delta - delta^j } / 2`.
pub fn verify_rho_bounds(
    game: &Game,
    grid: &QuantizedPolicySet,
    rho: &[f64],
    deltas: &[f64],
    bar_delta: f64,
    tol: f64,
) -> Result<RhoCheck, SolverError> {
    for (player, &delta) in deltas.iter().enumerate() {
        if !(delta > 0.0 && delta < bar_delta) {
            return Err(SolverError::DeltaOutOfRange { player, delta, bar_delta });
        }
    }
    for (player, &r) in rho.iter().enumerate() {
        if !(0.0..1.0).contains(&r) {
            return Err(SolverError::RhoOutOfRange { player, rho: r });
        }
    }
    let threshold = deltas
        .iter()
        .map(|&d| d.min(bar_delta - d))
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    let n = game.num_players();
    let deviations = scan_joint(game, grid, DEFAULT_ENUMERATION_CAP, |_, jp| {
        let perturbed = jp.perturb(rho);
        let mut dq = 0.0f64;
        let mut dj = 0.0f64;
        for i in 0..n {
            let q = solve_q_star(&induce_mdp(game, i, jp), tol);
            let q_hat = solve_q_star(&induce_mdp(game, i, &perturbed), tol);
            dq = dq.max(q.sup_distance(&q_hat));
            let j = evaluate_policy(game, jp, i, tol);
            let j_hat = evaluate_policy(game, &perturbed, i, tol);
            dj = dj.max(j.sup_distance(&j_hat));
        }
        (dq, dj)
    })?;
    let (max_q_deviation, max_j_deviation) = deviations
        .into_iter()
        .fold((0.0f64, 0.0f64), |(a, b), (q, j)| (a.max(q), b.max(j)));
    Ok(RhoCheck {
        passed: max_q_deviation < threshold && max_j_deviation < threshold,
        threshold,
        max_q_deviation,
        max_j_deviation,
    })
}

/// Outcome of shrinking a common perturbation rate until the bounds hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSearch {
    pub rho: f64,
    pub halvings: u32,
    pub check: RhoCheck,
}

/// Halve a common rate starting from `rho0` until [`verify_rho_bounds`]
/// passes, giving up after `max_halvings` halvings.
pub fn search_rho_by_halving(
    game: &Game,
    grid: &QuantizedPolicySet,
    rho0: f64,
    deltas: &[f64],
    bar_delta: f64,
    tol: f64,
    max_halvings: u32,
) -> Result<Option<RhoSearch>, SolverError> {
    let mut rho = rho0;
    for halvings in 0..=max_halvings {
        let check = verify_rho_bounds(game, grid, &vec![rho; game.num_players()], deltas, bar_delta, tol)?;
        if check.passed {
            return Ok(Some(RhoSearch { rho, halvings, check }));
        }
        rho /= 2.0;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;
    use crate::policy::GridPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ROCK: usize = 0;
    const PAPER: usize = 1;
    const SCISSORS: usize = 2;

    fn det(a: usize) -> StationaryPolicy {
        StationaryPolicy::deterministic(3, &[a])
    }

    fn uniform3() -> StationaryPolicy {
        StationaryPolicy::uniform(1, 3)
    }

    #[test]
    fn rps_against_uniform_has_zero_expected_cost() {
        let g = games::rock_paper_scissors(0.0);
        let joint = JointPolicy(vec![uniform3(), uniform3()]);
        let mdp = induce_mdp(&g, 0, &joint);
        for u in 0..3 {
            assert!(mdp.cost(0, u).abs() < 1e-15);
        }
        let q = solve_q_star(&mdp, 1e-12);
        assert!(q.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rps_against_rock() {
        let g = games::rock_paper_scissors(0.0);
        let joint = JointPolicy(vec![uniform3(), det(ROCK)]);
        let mdp = induce_mdp(&g, 0, &joint);
        assert_eq!(mdp.cost(0, ROCK), 0.0);
        assert_eq!(mdp.cost(0, PAPER), -1.0);
        assert_eq!(mdp.cost(0, SCISSORS), 1.0);
    }

    #[test]
    fn single_player_induced_mdp_is_the_game() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = games::random_mdp(&mut rng, 3, 2, 0.6);
        let joint = JointPolicy(vec![StationaryPolicy::uniform(3, 2)]);
        let mdp = induce_mdp(&g, 0, &joint);
        for x in 0..3 {
            for u in 0..2 {
                assert_eq!(mdp.cost(x, u), g.cost(0, x, u));
                assert_eq!(mdp.kernel_row(x, u), g.kernel_row(x, u));
            }
        }
    }

    #[test]
    fn myopic_q_star_is_stage_cost() {
        let g = games::rock_paper_scissors(0.0);
        let joint = JointPolicy(vec![uniform3(), StationaryPolicy::new(vec![vec![0.2, 0.5, 0.3]]).unwrap()]);
        let mdp = induce_mdp(&g, 1, &joint);
        let q = solve_q_star(&mdp, 1e-9);
        for u in 0..3 {
            assert_eq!(q.get(0, u), mdp.cost(0, u));
        }
    }

    fn swap_chain() -> InducedMdp {
        InducedMdp {
            num_states: 2,
            num_actions: 1,
            discount: 0.5,
            cost: vec![1.0, 0.0],
            kernel: vec![0.0, 1.0, 1.0, 0.0],
        }
    }

    #[test]
    fn two_state_swap_chain() {
        // Q(x1) = 1 + Q(x2)/2, Q(x2) = Q(x1)/2  =>  (4/3, 2/3)
        let q = solve_q_star(&swap_chain(), 1e-12);
        assert!((q.get(0, 0) - 4.0 / 3.0).abs() < 1e-11);
        assert!((q.get(1, 0) - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn bellman_residual_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for tol in [1e-4, 1e-8, 1e-10] {
            let g = games::random_symmetric_game(&mut rng, 2, 3, 3, 0.9, 0.05);
            let joint = JointPolicy(vec![StationaryPolicy::uniform(3, 3); 2]);
            let mdp = induce_mdp(&g, 0, &joint);
            let q = solve_q_star(&mdp, tol);
            assert!(mdp.bellman_residual(&q) <= tol);
            let bound = g.value_bound(0);
            assert!(q.values().iter().all(|v| v.abs() <= bound + 1e-9));
        }
    }

    #[test]
    fn evaluation_examples() {
        let g = games::rock_paper_scissors(0.0);
        let uu = JointPolicy(vec![uniform3(), uniform3()]);
        assert!(evaluate_policy(&g, &uu, 0, 1e-10).0[0].abs() < 1e-15);
        let sr = JointPolicy(vec![det(SCISSORS), det(ROCK)]);
        assert_eq!(evaluate_policy(&g, &sr, 0, 1e-10).0[0], 1.0);

        let mut zero = games::uniform_two_state();
        for c in zero.cost.iter_mut().flatten().flatten() {
            *c = 0.0;
        }
        let zg = zero.validate().unwrap();
        let j = JointPolicy(vec![StationaryPolicy::uniform(2, 2); 2]);
        assert!(evaluate_policy(&zg, &j, 1, 1e-10).0.iter().all(|&v| v == 0.0));
        assert!(is_eps_equilibrium(&zg, &j, 0.0, 1e-10));
    }

    #[test]
    fn evaluation_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = 1e-9;
        for _ in 0..20 {
            let g = games::random_symmetric_game(&mut rng, 3, 3, 2, 0.8, 0.0);
            let grid = QuantizedPolicySet::new(2, 3, 4).unwrap();
            let joint = grid.to_joint_policy(&(0..3).map(|_| grid.uniform_draw(&mut rng)).collect::<Vec<_>>());
            for i in 0..3 {
                let direct = evaluate_policy(&g, &joint, i, tol);
                let iter = evaluate_policy_iterative(&g, &joint, i, tol);
                let induced = induce_mdp(&g, i, &joint).evaluate(joint.player(i), tol);
                assert!(direct.sup_distance(&iter) <= 2.0 * tol);
                assert!(direct.sup_distance(&induced) <= 1e-12);
            }
        }
    }

    #[test]
    fn best_response_examples() {
        let g = games::rock_paper_scissors(0.0);
        let tol = 1e-10;
        for p in [det(ROCK), det(PAPER), StationaryPolicy::new(vec![vec![0.1, 0.2, 0.7]]).unwrap()] {
            let joint = JointPolicy(vec![p, uniform3()]);
            assert!(is_eps_best_response(&g, 0, &joint, 0.0, tol));
        }
        let sr = JointPolicy(vec![det(SCISSORS), det(ROCK)]);
        assert!(!is_eps_best_response(&g, 0, &sr, 0.2, tol));
        assert_eq!(certify_best_response(&g, 0, &sr, 0.2, tol), Verdict::Unsatisfied);
        // eps covering the whole value range accepts anything
        let big = 2.0 * g.c_max() / (1.0 - 0.0);
        assert!(is_eps_best_response(&g, 0, &sr, big, tol));
    }

    #[test]
    fn equilibrium_examples() {
        let g = games::rock_paper_scissors(0.0);
        let uu = JointPolicy(vec![uniform3(), uniform3()]);
        assert!(is_eps_equilibrium(&g, &uu, 0.0, 1e-10));
        let rr = JointPolicy(vec![det(ROCK), det(ROCK)]);
        assert!(!is_eps_equilibrium(&g, &rr, 0.2, 1e-10));
    }

    #[test]
    fn symmetric_players_share_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = games::random_symmetric_game(&mut rng, 2, 2, 3, 0.7, 0.05);
        let grid = QuantizedPolicySet::new(3, 2, 3).unwrap();
        for _ in 0..25 {
            let gp = grid.uniform_draw(&mut rng);
            let joint = grid.to_joint_policy(&[gp.clone(), gp]);
            // Induced MDPs of the two players are the same tables.
            let m0 = induce_mdp(&g, 0, &joint);
            let m1 = induce_mdp(&g, 1, &joint);
            assert_eq!(m0.cost, m1.cost);
            assert_eq!(m0.kernel, m1.kernel);
            for eps in [0.0, 0.05, 0.1, 0.3, 1.0] {
                assert_eq!(
                    is_eps_best_response(&g, 0, &joint, eps, 1e-10),
                    is_eps_best_response(&g, 1, &joint, eps, 1e-10)
                );
            }
        }
    }

    #[test]
    fn quantized_equilibria_rps() {
        let g = games::rock_paper_scissors(0.0);
        let grid = QuantizedPolicySet::new(3, 1, 10).unwrap();
        let eq = find_quantized_equilibria(&g, &grid, 0.2, 1e-10).unwrap();
        assert!(!eq.is_empty());
        let near_uniform = grid.index_of(&[0.3, 0.3, 0.4]).unwrap();
        assert!(eq.contains(&vec![GridPolicy(vec![near_uniform]); 2]));
        // brute-force cross-check from the reward matrix
        let mut brute = 0;
        for a in grid.points() {
            for b in grid.points() {
                let r = |p: &[f64], q: &[f64]| -> f64 {
                    (0..3).map(|i| (0..3).map(|j| p[i] * games::RPS_REWARD[i][j] * q[j]).sum::<f64>()).sum()
                };
                let best = |q: &[f64]| (0..3).map(|i| r(&det(i).row(0).to_vec(), q)).fold(f64::MIN, f64::max);
                let g0 = best(b) - r(a, b);
                let g1 = best(a) - r(b, a);
                brute += (g0 <= 0.2 + 1e-9 && g1 <= 0.2 + 1e-9) as usize;
            }
        }
        assert_eq!(eq.len(), brute);

        let all = find_quantized_equilibria(&g, &grid, 2.0, 1e-10).unwrap();
        assert_eq!(all.len(), 66 * 66);
    }

    #[test]
    fn dominant_team_game_has_one_pure_equilibrium() {
        let g = games::dominant_team_game();
        let grid = QuantizedPolicySet::new(2, 1, 1).unwrap();
        let eq = find_quantized_equilibria(&g, &grid, 0.0, 1e-10).unwrap();
        let zero = grid.index_of(&[1.0, 0.0]).unwrap();
        assert_eq!(eq, vec![vec![GridPolicy(vec![zero]); 2]]);
    }

    #[test]
    fn bar_delta_constant_costs() {
        let mut spec = games::rock_paper_scissors_spec(0.0);
        for c in spec.cost.iter_mut().flatten().flatten() {
            *c = 0.5;
        }
        let g = spec.validate().unwrap();
        let grid = QuantizedPolicySet::new(3, 1, 2).unwrap();
        let bd = compute_bar_delta(&g, &grid, 0.2, 1e-10).unwrap();
        assert!((bd.bar_delta - 0.2).abs() < 1e-12);
        assert_eq!(bd.profile.len(), 1);
        assert!(matches!(compute_bar_delta(&g, &grid, 0.0, 1e-10), Err(SolverError::AllGapsZero)));
    }

    #[test]
    fn bar_delta_rps_tenths() {
        let g = games::rock_paper_scissors(0.0);
        let grid = QuantizedPolicySet::new(3, 1, 10).unwrap();
        let bd = compute_bar_delta(&g, &grid, 0.2, 1e-10).unwrap();
        // stage values on a tenths grid are multiples of 1/100
        assert!((bd.bar_delta - 0.01).abs() < 1e-9, "{}", bd.bar_delta);
        let bd0 = compute_bar_delta(&g, &grid, 0.0, 1e-10).unwrap();
        assert!((bd0.bar_delta - 0.01).abs() < 1e-9);
        assert_eq!(bd0.profile[0], 0.0);
    }

    #[test]
    fn rho_bounds() {
        let g = games::rock_paper_scissors(0.0);
        let grid = QuantizedPolicySet::new(3, 1, 4).unwrap();
        let bd = compute_bar_delta(&g, &grid, 0.2, 1e-10).unwrap().bar_delta;
        let deltas = [bd / 2.0; 2];
        let tiny = verify_rho_bounds(&g, &grid, &[1e-8; 2], &deltas, bd, 1e-10).unwrap();
        assert!(tiny.passed);
        let coarse = verify_rho_bounds(&g, &grid, &[0.5; 2], &deltas, bd, 1e-10).unwrap();
        assert!(!coarse.passed);
        let found = search_rho_by_halving(&g, &grid, 0.5, &deltas, bd, 1e-10, 20).unwrap().unwrap();
        assert!(found.halvings > 0 && found.check.passed);
        assert!(matches!(
            verify_rho_bounds(&g, &grid, &[0.1; 2], &[bd, bd / 2.0], bd, 1e-10),
            Err(SolverError::DeltaOutOfRange { player: 0, .. })
        ));
    }

    #[test]
    fn perturbation_continuity_trend() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let g = games::random_symmetric_game(&mut rng, 2, 2, 2, 0.6, 0.05);
        let grid = QuantizedPolicySet::new(2, 2, 2).unwrap();
        let max_dev = |rho: f64| -> f64 {
            grid.enumerate_joint(2, 10_000)
                .unwrap()
                .map(|jg| {
                    let jp = grid.to_joint_policy(&jg);
                    let hat = jp.perturb(&[rho; 2]);
                    (0..2)
                        .map(|i| {
                            solve_q_star(&induce_mdp(&g, i, &jp), 1e-11)
                                .sup_distance(&solve_q_star(&induce_mdp(&g, i, &hat), 1e-11))
                        })
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let devs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&r| max_dev(r)).collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
    }

    #[test]
    fn value_continuity_trend() {
        // mean |J(a) - J(b)| over random pairs at distance <= h shrinks with h
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = games::random_symmetric_game(&mut rng, 2, 3, 3, 0.8, 0.05);
        let mut means = Vec::new();
        for h in [0.1f64, 0.05, 0.025] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut total = 0.0;
            for _ in 0..200 {
                let base: Vec<StationaryPolicy> = (0..2)
                    .map(|_| {
                        let rows = (0..3)
                            .map(|_| {
                                let w: Vec<f64> = (0..3).map(|_| rand::Rng::random::<f64>(&mut rng) + 0.2).collect();
                                let s: f64 = w.iter().sum();
                                w.iter().map(|v| v / s).collect()
                            })
                            .collect();
                        StationaryPolicy::new(rows).unwrap()
                    })
                    .collect();
                let a = JointPolicy(base);
                // shift mass h between the first two actions of every row
                let b = JointPolicy(
                    a.0.iter()
                        .map(|p| {
                            let rows = p
                                .to_rows()
                                .into_iter()
                                .map(|mut r| {
                                    let d = h.min(r[1]);
                                    r[0] += d;
                                    r[1] -= d;
                                    r
                                })
                                .collect();
                            StationaryPolicy::new(rows).unwrap()
                        })
                        .collect(),
                );
                assert!(crate::policy::policy_distance(&a, &b).unwrap() <= h + 1e-12);
                total += evaluate_policy(&g, &a, 0, 1e-10).sup_distance(&evaluate_policy(&g, &b, 0, 1e-10));
            }
            means.push(total / 200.0);
        }
        assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
    }

    #[test]
    fn oracle_memoizes_and_classifies() {
        let g = games::rock_paper_scissors(0.0);
        let oracle = GapOracle::new(&g, 1e-10);
        let rr = JointPolicy(vec![det(ROCK), det(ROCK)]);
        assert_eq!(oracle.satisfaction(&rr, 0.2, BoundaryRule::Abort).unwrap(), vec![false, false]);
        // Rock vs Rock has gap exactly 1 for both players
        let err = oracle.satisfaction(&rr, 1.0, BoundaryRule::Abort).unwrap_err();
        assert_eq!(err.player, 0);
        assert_eq!(oracle.satisfaction(&rr, 1.0, BoundaryRule::Satisfied).unwrap(), vec![true, true]);
        assert!(Rc::ptr_eq(&oracle.gaps(&rr), &oracle.gaps(&rr.clone())));
        assert!(oracle.is_equilibrium(&JointPolicy(vec![uniform3(), uniform3()]), 0.0));
    }
}
