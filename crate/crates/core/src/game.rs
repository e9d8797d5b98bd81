//! Finite discounted stochastic games.
//!
//! A [`GameSpec`] is the raw, serializable description of a game: players,
//! states, per-player action sets, per-player stage costs, discount factors,
//! a Markov transition kernel and an initial state distribution. Validating it
//! produces a [`Game`], which is immutable and cheap to share between worker
//! threads.
//!
//! Joint actions are addressed by a single row-major index over the players'
//! action indices: player 0 is the most significant digit. The same index is
//! used by the JSON file format, so files written by other tools line up as
//! long as they follow that convention.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for kernel rows and the initial distribution.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Default absolute tolerance for table equality in symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("game has no players, states or actions ({0})")]
    EmptyStateOrActionSet(&'static str),
    #[error("shape mismatch in {field}: expected {expected}, found {found}")]
    ShapeMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("kernel row at state {state}, joint action {joint_action} sums to {sum}")]
    KernelRowNotStochastic {
        state: usize,
        joint_action: usize,
        sum: f64,
    },
    #[error("negative probability {value} in {field}")]
    NegativeProbability { field: String, value: f64 },
    #[error("initial distribution sums to {0}")]
    InitialDistNotStochastic(f64),
    #[error("cost of player {player} at state {state}, joint action {joint_action} is not finite")]
    NonFiniteCost {
        player: usize,
        state: usize,
        joint_action: usize,
    },
    #[error("discount factor of player {player} is {value}, must lie in [0, 1)")]
    DiscountOutOfRange { player: usize, value: f64 },
    #[error("failed to read game file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse game file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Raw game description, mirroring the JSON game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub num_players: usize,
    pub num_states: usize,
    /// Number of actions per player.
    pub num_actions: Vec<usize>,
    /// Discount factor per player.
    pub discount: Vec<f64>,
    /// `cost[player][state][joint_action]`.
    pub cost: Vec<Vec<Vec<f64>>>,
    /// `kernel[state][joint_action][next_state]`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub initial_dist: Vec<f64>,
}

impl GameSpec {
    pub fn from_json_str(s: &str) -> Result<Self, GameError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game spec serializes")
    }

    pub fn validate(self) -> Result<Game, GameError> {
        Game::new(self)
    }
}

/// A validated, immutable stochastic game.
#[derive(Debug, Clone)]
pub struct Game {
    spec: GameSpec,
    num_joint: usize,
    /// Row-major strides of the joint-action index, one per player.
    strides: Vec<usize>,
    cost: Vec<f64>,
    kernel: Vec<f64>,
    c_max: f64,
}

impl Game {
    pub fn new(spec: GameSpec) -> Result<Self, GameError> {
        if spec.num_players == 0 {
            return Err(GameError::EmptyStateOrActionSet("players"));
        }
        if spec.num_states == 0 {
            return Err(GameError::EmptyStateOrActionSet("states"));
        }
        check_len("num_actions", spec.num_players, spec.num_actions.len())?;
        check_len("discount", spec.num_players, spec.discount.len())?;
        if spec.num_actions.iter().any(|&a| a == 0) {
            return Err(GameError::EmptyStateOrActionSet("actions"));
        }
        for (player, &beta) in spec.discount.iter().enumerate() {
            if !(0.0..1.0).contains(&beta) {
                return Err(GameError::DiscountOutOfRange {
                    player,
                    value: beta,
                });
            }
        }

        let n_states = spec.num_states;
        let mut strides = vec![1usize; spec.num_players];
        for p in (0..spec.num_players.saturating_sub(1)).rev() {
            strides[p] = strides[p + 1] * spec.num_actions[p + 1];
        }
        let num_joint = strides[0] * spec.num_actions[0];

        check_len("cost", spec.num_players, spec.cost.len())?;
        let mut cost = Vec::with_capacity(spec.num_players * n_states * num_joint);
        let mut c_max = 0.0f64;
        for (player, per_state) in spec.cost.iter().enumerate() {
            check_len("cost[player]", n_states, per_state.len())?;
            for (state, row) in per_state.iter().enumerate() {
                check_len("cost[player][state]", num_joint, row.len())?;
                for (joint_action, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        return Err(GameError::NonFiniteCost {
                            player,
                            state,
                            joint_action,
                        });
                    }
                    c_max = c_max.max(c.abs());
                    cost.push(c);
                }
            }
        }

        check_len("kernel", n_states, spec.kernel.len())?;
        let mut kernel = Vec::with_capacity(n_states * num_joint * n_states);
        for (state, per_joint) in spec.kernel.iter().enumerate() {
            check_len("kernel[state]", num_joint, per_joint.len())?;
            for (joint_action, row) in per_joint.iter().enumerate() {
                check_len("kernel[state][joint_action]", n_states, row.len())?;
                for (next, &p) in row.iter().enumerate() {
                    if !(p >= 0.0) {
                        return Err(GameError::NegativeProbability {
                            field: format!("kernel[{state}][{joint_action}][{next}]"),
                            value: p,
                        });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(GameError::KernelRowNotStochastic {
                        state,
                        joint_action,
                        sum,
                    });
                }
                kernel.extend_from_slice(row);
            }
        }

        check_len("initial_dist", n_states, spec.initial_dist.len())?;
        for (x, &p) in spec.initial_dist.iter().enumerate() {
            if !(p >= 0.0) {
                return Err(GameError::NegativeProbability {
                    field: format!("initial_dist[{x}]"),
                    value: p,
                });
            }
        }
        let sum: f64 = spec.initial_dist.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(GameError::InitialDistNotStochastic(sum));
        }

        Ok(Self {
            spec,
            num_joint,
            strides,
            cost,
            kernel,
            c_max,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        GameSpec::load(path)?.validate()
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn num_players(&self) -> usize {
        self.spec.num_players
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.spec.num_actions[player]
    }

    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn discount(&self, player: usize) -> f64 {
        self.spec.discount[player]
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.spec.initial_dist
    }

    /// Largest absolute stage cost over all players, states and joint actions.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// `c_max / (1 - beta)`: a bound on every discounted value of `player`.
    pub fn value_bound(&self, player: usize) -> f64 {
        self.c_max / (1.0 - self.discount(player))
    }

    #[inline]
    pub fn cost(&self, player: usize, state: usize, joint: usize) -> f64 {
        self.cost[(player * self.spec.num_states + state) * self.num_joint + joint]
    }

    #[inline]
    pub fn kernel_row(&self, state: usize, joint: usize) -> &[f64] {
        let n = self.spec.num_states;
        let start = (state * self.num_joint + joint) * n;
        &self.kernel[start..start + n]
    }

    /// Row-major joint-action index of per-player actions.
    #[inline]
    pub fn joint_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_players());
        actions
            .iter()
            .zip(&self.strides)
            .map(|(a, s)| a * s)
            .sum()
    }

    /// Inverse of [`Game::joint_index`].
    pub fn decode_joint(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.num_players()];
        for (p, &stride) in self.strides.iter().enumerate() {
            out[p] = joint / stride;
            joint %= stride;
        }
        out
    }

    /// Action of `player` inside joint action `joint`.
    #[inline]
    pub fn action_of(&self, joint: usize, player: usize) -> usize {
        (joint / self.strides[player]) % self.spec.num_actions[player]
    }

    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(rng, &self.spec.initial_dist)
    }

    /// Draw the successor of `state` under joint action index `joint`.
    pub fn sample_transition<R: Rng + ?Sized>(&self, rng: &mut R, state: usize, joint: usize) -> usize {
        sample_categorical(rng, self.kernel_row(state, joint))
    }

    /// Play one stage game and report everything that happened.
    pub fn play_stage<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        state: usize,
        actions: &[usize],
    ) -> StageOutcome {
        let joint = self.joint_index(actions);
        let costs = (0..self.num_players())
            .map(|i| self.cost(i, state, joint))
            .collect();
        let next_state = self.sample_transition(rng, state, joint);
        StageOutcome {
            state,
            joint_action: actions.to_vec(),
            costs,
            next_state,
        }
    }

    /// Check the symmetry conditions on every transposition of players.
    ///
    /// Transpositions generate the symmetric group, so equality under each of
    /// them implies equality under every permutation.
    pub fn check_symmetry(&self, tol: f64) -> SymmetryReport {
        let n = self.num_players();
        for i in 0..n {
            for j in (i + 1)..n {
                if let Some(w) = self.check_transposition(i, j, tol) {
                    return SymmetryReport {
                        is_symmetric: false,
                        witness: Some(w),
                    };
                }
            }
        }
        SymmetryReport {
            is_symmetric: true,
            witness: None,
        }
    }

    fn check_transposition(&self, i: usize, j: usize, tol: f64) -> Option<SymmetryWitness> {
        let witness = |state, joint_action, condition| SymmetryWitness {
            transposition: (i, j),
            state,
            joint_action,
            condition,
        };
        if self.num_actions(i) != self.num_actions(j) {
            return Some(witness(0, Vec::new(), SymmetryCondition::ActionSets));
        }
        if (self.discount(i) - self.discount(j)).abs() > tol {
            return Some(witness(0, Vec::new(), SymmetryCondition::Discounts));
        }
        let swap = |p: usize| {
            if p == i {
                j
            } else if p == j {
                i
            } else {
                p
            }
        };
        for joint in 0..self.num_joint {
            let actions = self.decode_joint(joint);
            let mut permuted = actions.clone();
            permuted.swap(i, j);
            let pjoint = self.joint_index(&permuted);
            for x in 0..self.num_states() {
                for k in 0..self.num_players() {
                    if (self.cost(k, x, pjoint) - self.cost(swap(k), x, joint)).abs() > tol {
                        return Some(witness(x, actions, SymmetryCondition::Cost { player: k }));
                    }
                }
                let a = self.kernel_row(x, joint);
                let b = self.kernel_row(x, pjoint);
                if a.iter().zip(b).any(|(p, q)| (p - q).abs() > tol) {
                    return Some(witness(x, actions, SymmetryCondition::Kernel));
                }
            }
        }
        None
    }

    /// True iff every state can reach every other state under some sequence
    /// of joint actions.
    pub fn check_reachability(&self) -> bool {
        let n = self.num_states();
        let mut forward = vec![Vec::new(); n];
        let mut backward = vec![Vec::new(); n];
        for x in 0..n {
            for y in 0..n {
                let reachable = (0..self.num_joint).any(|a| self.kernel_row(x, a)[y] > 0.0);
                if reachable {
                    forward[x].push(y);
                    backward[y].push(x);
                }
            }
        }
        reaches_all(&forward) && reaches_all(&backward)
    }
}

fn reaches_all(adjacency: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &y in &adjacency[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn check_len(field: &'static str, expected: usize, found: usize) -> Result<(), GameError> {
    if expected == found {
        Ok(())
    } else {
        Err(GameError::ShapeMismatch {
            field,
            expected,
            found,
        })
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = k;
            if u < acc {
                return k;
            }
        }
    }
    // rounding left a sliver of mass past the final cumulative sum
    last_positive
}

/// Everything that happened in one stage game.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub state: usize,
    pub joint_action: Vec<usize>,
    pub costs: Vec<f64>,
    pub next_state: usize,
}

impl StageOutcome {
    /// The part of the outcome an independent learner is allowed to see.
    pub fn observation_for(&self, player: usize) -> LocalObservation {
        LocalObservation {
            state: self.state,
            action: self.joint_action[player],
            cost: self.costs[player],
            next_state: self.next_state,
        }
    }
}

/// What player `i` observes after a stage: the shared state, its own action,
/// its own realized cost, and the successor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalObservation {
    pub state: usize,
    pub action: usize,
    pub cost: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub is_symmetric: bool,
    pub witness: Option<SymmetryWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryWitness {
    pub transposition: (usize, usize),
    pub state: usize,
    pub joint_action: Vec<usize>,
    pub condition: SymmetryCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryCondition {
    ActionSets,
    Discounts,
    /// `c^k(x, sigma(a)) != c^{sigma(k)}(x, a)`.
    Cost { player: usize },
    Kernel,
}

impl fmt::Display for SymmetryWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.transposition;
        match self.condition {
            SymmetryCondition::ActionSets => write!(f, "players {i} and {j} have different action sets"),
            SymmetryCondition::Discounts => write!(f, "players {i} and {j} have different discounts"),
            SymmetryCondition::Cost { player } => write!(
                f,
                "swap ({i} {j}) changes cost of player {player} at state {}, joint action {:?}",
                self.state, self.joint_action
            ),
            SymmetryCondition::Kernel => write!(
                f,
                "swap ({i} {j}) changes the kernel row at state {}, joint action {:?}",
                self.state, self.joint_action
            ),
        }
    }
}
