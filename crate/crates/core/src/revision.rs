//! ε-revision paths: sequences of joint policies along which no player that
//! is ε-best-responding ever changes its policy.
//!
//! [`construct_symmetric_path`] builds such a path in a symmetric game by
//! growing a cohort of players that share one policy, and
//! [`has_revision_paths_property`] runs it from every start in a quantized
//! joint grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, SYMMETRY_TOL};
use crate::policy::{JointPolicy, PolicyError, QuantizedPolicySet, DEFAULT_ENUMERATION_CAP};
use crate::solver::{self, BoundaryRule, GapOracle, IndeterminateMargin, SolverError};

#[derive(Debug, Error, PartialEq)]
pub enum RevisionError {
    #[error("game is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("target joint policy is not an eps-equilibrium")]
    NoTargetEquilibrium,
    #[error("revision path is empty")]
    EmptyPath,
    #[error("players {first} and {second} share a policy but disagree on satisfaction")]
    InconsistentCohort { first: usize, second: usize },
    #[error(transparent)]
    Indeterminate(#[from] IndeterminateMargin),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A finite sequence of joint policies with per-step satisfaction records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionPath {
    pub eps: f64,
    pub steps: Vec<JointPolicy>,
    /// `certificates[k][i]`: player `i` was ε-best-responding at step `k`.
    pub certificates: Vec<Vec<bool>>,
    /// Cohort behind each step of a constructed path. Entry 0 is the set of
    /// unsatisfied players at the start; a jump straight into the target
    /// equilibrium has no cohort.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cohorts: Vec<Option<Vec<usize>>>,
}

impl RevisionPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn terminal(&self) -> &JointPolicy {
        self.steps.last().expect("revision path is nonempty")
    }
}

/// A satisfied player that nevertheless changed its policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathViolation {
    pub step: usize,
    pub player: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathValidation {
    pub valid: bool,
    pub violation: Option<PathViolation>,
    pub terminal_is_eq: bool,
    /// Recorded certificates agree with the recomputed satisfaction.
    pub certificates_match: bool,
}

/// Recompute satisfaction along `path` and check that satisfied players
/// never move.
pub fn is_valid_revision_path(
    game: &Game,
    path: &RevisionPath,
    tol: f64,
    rule: BoundaryRule,
) -> Result<PathValidation, RevisionError> {
    let oracle = GapOracle::new(game, tol);
    validate_with(&oracle, path, rule)
}

pub fn validate_with(oracle: &GapOracle<'_>, path: &RevisionPath, rule: BoundaryRule) -> Result<PathValidation, RevisionError> {
    if path.steps.is_empty() {
        return Err(RevisionError::EmptyPath);
    }
    let mut violation = None;
    let mut certificates_match = path.certificates.len() == path.steps.len();
    let mut last = Vec::new();
    for (k, step) in path.steps.iter().enumerate() {
        let sat = oracle.satisfaction(step, path.eps, rule)?;
        if path.certificates.get(k) != Some(&sat) {
            certificates_match = false;
        }
        if violation.is_none() {
            if let Some(next) = path.steps.get(k + 1) {
                violation = (0..step.num_players())
                    .find(|&i| sat[i] && next.player(i) != step.player(i))
                    .map(|player| PathViolation { step: k, player });
            }
        }
        last = sat;
    }
    Ok(PathValidation {
        valid: violation.is_none(),
        violation,
        terminal_is_eq: last.iter().all(|&s| s),
        certificates_match,
    })
}

/// Build an ε-revision path from `start` into the ε-equilibrium set by
/// growing a cohort of players that share a policy.
///
/// Whenever the proof leaves a choice open (the distinguished player, the
/// cohort representative) the lowest player index is taken.
pub fn construct_symmetric_path(
    game: &Game,
    start: &JointPolicy,
    eps: f64,
    target_eq: &JointPolicy,
    tol: f64,
    rule: BoundaryRule,
) -> Result<RevisionPath, RevisionError> {
    let report = game.check_symmetry(SYMMETRY_TOL);
    if let Some(w) = report.witness {
        return Err(RevisionError::NotSymmetric(w.to_string()));
    }
    let oracle = GapOracle::new(game, tol);
    construct_with(&oracle, start, eps, target_eq, rule)
}

/// [`construct_symmetric_path`] without the symmetry check, sharing a
/// memoizing oracle across calls.
pub fn construct_with(
    oracle: &GapOracle<'_>,
    start: &JointPolicy,
    eps: f64,
    target_eq: &JointPolicy,
    rule: BoundaryRule,
) -> Result<RevisionPath, RevisionError> {
    let n = start.num_players();
    let all_satisfied = |s: &[bool]| s.iter().all(|&b| b);
    let target_sat = oracle.satisfaction(target_eq, eps, rule)?;
    if !all_satisfied(&target_sat) {
        return Err(RevisionError::NoTargetEquilibrium);
    }

    let mut sat = oracle.satisfaction(start, eps, rule)?;
    let unsatisfied: Vec<usize> = (0..n).filter(|&i| !sat[i]).collect();
    let mut path = RevisionPath {
        eps,
        steps: vec![start.clone()],
        certificates: vec![sat.clone()],
        cohorts: vec![Some(unsatisfied.clone())],
    };
    if unsatisfied.is_empty() {
        return Ok(path);
    }
    if unsatisfied.len() == n {
        push_jump(&mut path, target_eq, target_sat);
        return Ok(path);
    }

    // First step: the unsatisfied players copy the lowest-index satisfied one.
    let leader = (0..n).find(|&i| sat[i]).expect("some player is satisfied");
    let mut current = start.clone();
    for &i in &unsatisfied {
        current = current.with_player(i, start.player(leader).clone());
    }
    let mut cohort = sharing(&current, leader);
    sat = oracle.satisfaction(&current, eps, rule)?;
    push_step(&mut path, &current, &sat, &cohort);

    while !all_satisfied(&sat) {
        if cohort.len() == n {
            push_jump(&mut path, target_eq, target_sat);
            return Ok(path);
        }
        let rep = cohort[0];
        if let Some(&other) = cohort.iter().find(|&&i| sat[i] != sat[rep]) {
            return Err(RevisionError::InconsistentCohort { first: rep, second: other });
        }
        if sat[rep] {
            // Cohort satisfied: an unsatisfied outsider joins it.
            let joiner = (0..n)
                .find(|&i| !sat[i] && !cohort.contains(&i))
                .expect("an outsider is unsatisfied");
            current = current.with_player(joiner, current.player(rep).clone());
            cohort.push(joiner);
            cohort.sort_unstable();
        } else {
            // Cohort unsatisfied: it moves onto the lowest outsider's policy.
            let target = (0..n).find(|i| !cohort.contains(i)).expect("cohort is not everyone");
            let policy = current.player(target).clone();
            for &i in &cohort {
                current = current.with_player(i, policy.clone());
            }
            cohort = sharing(&current, target);
        }
        sat = oracle.satisfaction(&current, eps, rule)?;
        push_step(&mut path, &current, &sat, &cohort);
    }
    Ok(path)
}

fn sharing(joint: &JointPolicy, player: usize) -> Vec<usize> {
    (0..joint.num_players())
        .filter(|&i| joint.player(i) == joint.player(player))
        .collect()
}

fn push_step(path: &mut RevisionPath, joint: &JointPolicy, sat: &[bool], cohort: &[usize]) {
    path.steps.push(joint.clone());
    path.certificates.push(sat.to_vec());
    path.cohorts.push(Some(cohort.to_vec()));
}

fn push_jump(path: &mut RevisionPath, target: &JointPolicy, sat: Vec<bool>) {
    path.steps.push(target.clone());
    path.certificates.push(sat);
    path.cohorts.push(None);
}

/// Check the three cohort properties at every recorded step after the first:
/// cohort members share a policy, the cohort strictly grows, and no outsider
/// uses the cohort's policy.
pub fn cohort_properties_hold(path: &RevisionPath) -> bool {
    let mut prev_size = match path.cohorts.first() {
        Some(Some(c)) => c.len(),
        _ => return false,
    };
    for (k, cohort) in path.cohorts.iter().enumerate().skip(1) {
        let Some(cohort) = cohort else {
            // a jump may only end the path
            return k + 1 == path.cohorts.len();
        };
        let step = &path.steps[k];
        let Some(&rep) = cohort.first() else { return false };
        let shared = cohort.iter().all(|&i| step.player(i) == step.player(rep));
        let grew = cohort.len() > prev_size;
        let separated = (0..step.num_players())
            .filter(|i| !cohort.contains(i))
            .all(|j| step.player(j) != step.player(rep));
        if !(shared && grew && separated) {
            return false;
        }
        prev_size = cohort.len();
    }
    true
}

/// A start from which the constructed path failed validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub start_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsPropertyReport {
    pub holds: bool,
    pub starts: u64,
    pub max_length: usize,
    /// Joint id of the target equilibrium (lowest id in the ε-equilibrium set).
    pub target_id: u64,
    pub failures: Vec<PathFailure>,
}

/// Construct and validate a path from every joint grid policy.
///
/// The target is the lowest-id ε-equilibrium of the grid; the property holds
/// if every path validates, ends in the equilibrium set and has at most
/// `N + 1` entries.
pub fn has_revision_paths_property(
    game: &Game,
    grid: &QuantizedPolicySet,
    eps: f64,
    tol: f64,
    rule: BoundaryRule,
) -> Result<PathsPropertyReport, RevisionError> {
    let report = game.check_symmetry(SYMMETRY_TOL);
    if let Some(w) = report.witness {
        return Err(RevisionError::NotSymmetric(w.to_string()));
    }
    let n = game.num_players();
    let count = grid.checked_joint_count(n, DEFAULT_ENUMERATION_CAP)?;
    let oracle = GapOracle::new(game, tol);
    let target_id = (0..count)
        .find(|&id| oracle.is_equilibrium(&grid.to_joint_policy(&grid.joint_from_id(n, id)), eps))
        .ok_or(RevisionError::NoTargetEquilibrium)?;
    drop(oracle);
    let target = grid.to_joint_policy(&grid.joint_from_id(n, target_id));

    let outcomes: Vec<Result<usize, PathFailure>> = (0..count)
        .into_par_iter()
        .map_init(
            || GapOracle::new(game, tol),
            |oracle, id| {
                let start = grid.to_joint_policy(&grid.joint_from_id(n, id));
                let fail = |reason: String| PathFailure { start_id: id, reason };
                let path = construct_with(oracle, &start, eps, &target, rule).map_err(|e| fail(e.to_string()))?;
                let check = validate_with(oracle, &path, rule).map_err(|e| fail(e.to_string()))?;
                if !check.valid {
                    return Err(fail(format!("{:?}", check.violation)));
                }
                if !check.terminal_is_eq {
                    return Err(fail("terminal policy is not an equilibrium".into()));
                }
                if path.len() > n + 1 {
                    return Err(fail(format!("length {} exceeds {}", path.len(), n + 1)));
                }
                Ok(path.len())
            },
        )
        .collect();

    let mut max_length = 0;
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(len) => max_length = max_length.max(len),
            Err(f) => failures.push(f),
        }
    }
    Ok(PathsPropertyReport {
        holds: failures.is_empty(),
        starts: count,
        max_length,
        target_id,
        failures,
    })
}

/// Lowest-id ε-equilibrium of the grid, if any.
pub fn first_equilibrium(game: &Game, grid: &QuantizedPolicySet, eps: f64, tol: f64) -> Result<Option<JointPolicy>, RevisionError> {
    let eq = solver::find_quantized_equilibria(game, grid, eps, tol)?;
    Ok(eq.first().map(|jg| grid.to_joint_policy(jg)))
}
