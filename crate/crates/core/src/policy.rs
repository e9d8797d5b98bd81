//! Stationary policies, the uniform simplex grid and policy perturbations.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::sample_categorical;

/// Row-sum tolerance for stationary policies.
pub const ROW_TOL: f64 = 1e-12;

/// Default cap on the number of policies a full enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("policy has no states or no actions")]
    Empty,
    #[error("row {state} has {found} entries, expected {expected}")]
    RaggedRow {
        state: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {state} is not a probability vector (sum {sum})")]
    NotADistribution { state: usize, sum: f64 },
    #[error("policy shapes differ")]
    ShapeMismatch,
    #[error("grid needs resolution >= 1 and at least two actions (m = {resolution}, actions = {actions})")]
    InvalidGrid { resolution: u32, actions: usize },
    #[error("enumeration would produce {count} items, above the cap of {cap}")]
    CombinatorialBlowup { count: u128, cap: u64 },
}

/// A stationary policy: one probability vector over actions per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StationaryPolicy {
    num_actions: usize,
    probs: Vec<f64>,
}

impl StationaryPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PolicyError> {
        let num_actions = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || num_actions == 0 {
            return Err(PolicyError::Empty);
        }
        let mut probs = Vec::with_capacity(rows.len() * num_actions);
        for (state, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(PolicyError::RaggedRow {
                    state,
                    expected: num_actions,
                    found: row.len(),
                });
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(PolicyError::NotADistribution { state, sum });
            }
            probs.extend_from_slice(row);
        }
        Ok(Self { num_actions, probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// Deterministic policy playing `actions[x]` at state `x`.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (x, &a) in actions.iter().enumerate() {
            probs[x * num_actions + a] = 1.0;
        }
        Self { num_actions, probs }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.num_actions..(state + 1) * self.num_actions]
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state * self.num_actions + action]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.num_actions)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// The `rho`-perturbation: each row mixed with the uniform distribution,
    /// weight `rho` on uniform.
    pub fn perturb(&self, rho: f64) -> Self {
        let uniform = rho / self.num_actions as f64;
        Self {
            num_actions: self.num_actions,
            probs: self.probs.iter().map(|p| (1.0 - rho) * p + uniform).collect(),
        }
    }

    /// Draw an action at `state`.
    pub fn sample_action<R: Rng + ?Sized>(&self, rng: &mut R, state: usize) -> usize {
        sample_categorical(rng, self.row(state))
    }

    /// Largest absolute coordinate difference.
    pub fn distance(&self, other: &Self) -> Result<f64, PolicyError> {
        if self.num_actions != other.num_actions || self.probs.len() != other.probs.len() {
            return Err(PolicyError::ShapeMismatch);
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    /// Bit patterns of every probability, for exact hashing.
    pub(crate) fn bits(&self) -> impl Iterator<Item = u64> + '_ {
        self.probs.iter().map(|p| p.to_bits())
    }
}

impl TryFrom<Vec<Vec<f64>>> for StationaryPolicy {
    type Error = PolicyError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<StationaryPolicy> for Vec<Vec<f64>> {
    fn from(p: StationaryPolicy) -> Self {
        p.to_rows()
    }
}

/// One stationary policy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointPolicy(pub Vec<StationaryPolicy>);

impl JointPolicy {
    pub fn num_players(&self) -> usize {
        self.0.len()
    }

    pub fn player(&self, i: usize) -> &StationaryPolicy {
        &self.0[i]
    }

    /// Same joint policy with player `i` replaced.
    pub fn with_player(&self, i: usize, policy: StationaryPolicy) -> Self {
        let mut out = self.clone();
        out.0[i] = policy;
        out
    }

    /// Every player's policy perturbed by its own rate.
    pub fn perturb(&self, rho: &[f64]) -> Self {
        JointPolicy(self.0.iter().zip(rho).map(|(p, &r)| p.perturb(r)).collect())
    }

    pub(crate) fn bits(&self) -> Vec<u64> {
        self.0.iter().flat_map(StationaryPolicy::bits).collect()
    }
}

/// Sup-norm distance over players, states and actions.
pub fn policy_distance(a: &JointPolicy, b: &JointPolicy) -> Result<f64, PolicyError> {
    if a.num_players() != b.num_players() {
        return Err(PolicyError::ShapeMismatch);
    }
    a.0.iter()
        .zip(&b.0)
        .try_fold(0.0f64, |m, (p, q)| Ok(m.max(p.distance(q)?)))
}

/// A member of a quantized policy set: the grid-point index used at each
/// state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridPolicy(pub Vec<usize>);

/// One grid policy per player.
pub type JointGridPolicy = Vec<GridPolicy>;

/// Uniform quantization of the policies of one player.
///
/// Grid points are the probability vectors whose coordinates are multiples
/// of `1/m`, enumerated in lexicographic order of their integer numerators.
/// A quantized policy picks one grid point per state, so the set of
/// policies is the product of per-state grids; policy ids are mixed-radix
/// numbers with state 0 as the most significant digit.
#[derive(Debug, Clone)]
pub struct QuantizedPolicySet {
    resolution: u32,
    num_actions: usize,
    num_states: usize,
    numerators: Vec<Vec<u32>>,
    points: Vec<Vec<f64>>,
}

impl QuantizedPolicySet {
    pub fn new(num_actions: usize, num_states: usize, resolution: u32) -> Result<Self, PolicyError> {
        if resolution == 0 || num_actions < 2 || num_states == 0 {
            return Err(PolicyError::InvalidGrid {
                resolution,
                actions: num_actions,
            });
        }
        let numerators = compositions(resolution, num_actions);
        let m = resolution as f64;
        let points = numerators
            .iter()
            .map(|c| c.iter().map(|&k| k as f64 / m).collect())
            .collect();
        Ok(Self {
            resolution,
            num_actions,
            num_states,
            numerators,
            points,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    pub fn numerators(&self, k: usize) -> &[u32] {
        &self.numerators[k]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(Vec::as_slice)
    }

    /// Index of the grid point with these numerators.
    pub fn index_of_numerators(&self, numerators: &[u32]) -> Option<usize> {
        self.numerators.binary_search_by(|c| c.as_slice().cmp(numerators)).ok()
    }

    /// Index of the grid point equal to `row` (up to rounding), if any.
    pub fn index_of(&self, row: &[f64]) -> Option<usize> {
        if row.len() != self.num_actions {
            return None;
        }
        let m = self.resolution as f64;
        let mut nums = Vec::with_capacity(row.len());
        for &p in row {
            let k = (p * m).round();
            if (p * m - k).abs() > 1e-9 || k < 0.0 {
                return None;
            }
            nums.push(k as u32);
        }
        self.index_of_numerators(&nums)
    }

    /// Number of quantized policies, `|points|^|X|`.
    pub fn policy_count(&self) -> u128 {
        (self.points.len() as u128).saturating_pow(self.num_states as u32)
    }

    pub fn to_policy(&self, gp: &GridPolicy) -> StationaryPolicy {
        let mut probs = Vec::with_capacity(self.num_states * self.num_actions);
        for &k in &gp.0 {
            probs.extend_from_slice(&self.points[k]);
        }
        StationaryPolicy {
            num_actions: self.num_actions,
            probs,
        }
    }

    pub fn to_joint_policy(&self, joint: &[GridPolicy]) -> JointPolicy {
        JointPolicy(joint.iter().map(|gp| self.to_policy(gp)).collect())
    }

    /// Grid representation of `policy` if every row is a grid point.
    pub fn locate(&self, policy: &StationaryPolicy) -> Option<GridPolicy> {
        if policy.num_states() != self.num_states {
            return None;
        }
        policy
            .rows()
            .map(|row| self.index_of(row))
            .collect::<Option<Vec<_>>>()
            .map(GridPolicy)
    }

    pub fn contains(&self, policy: &StationaryPolicy) -> bool {
        self.locate(policy).is_some()
    }

    /// Grid point closest to `row` in sup-norm; ties go to the lowest index.
    pub fn project_row(&self, row: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, p) in self.points.iter().enumerate() {
            let d = p.iter().zip(row).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            // exact ties show up as rounding noise in the distances
            if d < best.0 - 1e-12 {
                best = (d, k);
            }
        }
        best.1
    }

    /// Per-state nearest grid point.
    pub fn project(&self, target: &StationaryPolicy) -> GridPolicy {
        GridPolicy(target.rows().map(|r| self.project_row(r)).collect())
    }

    /// Mixed-radix id of a grid policy.
    pub fn policy_id(&self, gp: &GridPolicy) -> u64 {
        let radix = self.points.len() as u64;
        gp.0.iter().fold(0u64, |id, &k| id * radix + k as u64)
    }

    pub fn policy_from_id(&self, mut id: u64) -> GridPolicy {
        let radix = self.points.len() as u64;
        let mut out = vec![0; self.num_states];
        for slot in out.iter_mut().rev() {
            *slot = (id % radix) as usize;
            id /= radix;
        }
        GridPolicy(out)
    }

    /// Draw a policy uniformly from the set.
    pub fn uniform_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GridPolicy {
        GridPolicy(
            (0..self.num_states)
                .map(|_| rng.random_range(0..self.points.len()))
                .collect(),
        )
    }

    /// All policies in id order, refused if there are more than `cap`.
    pub fn enumerate(&self, cap: u64) -> Result<impl Iterator<Item = GridPolicy> + '_, PolicyError> {
        let count = self.policy_count();
        if count > cap as u128 {
            return Err(PolicyError::CombinatorialBlowup { count, cap });
        }
        Ok((0..count as u64).map(move |id| self.policy_from_id(id)))
    }

    /// Number of joint policies for `num_players` players (saturating).
    pub fn joint_count(&self, num_players: usize) -> u128 {
        self.policy_count().checked_pow(num_players as u32).unwrap_or(u128::MAX)
    }

    /// Joint policy with mixed-radix id `id`; player 0 is the most
    /// significant digit.
    pub fn joint_from_id(&self, num_players: usize, mut id: u64) -> JointGridPolicy {
        let per = self.policy_count() as u64;
        let mut joint = vec![GridPolicy(Vec::new()); num_players];
        for slot in joint.iter_mut().rev() {
            *slot = self.policy_from_id(id % per);
            id /= per;
        }
        joint
    }

    pub fn joint_id(&self, joint: &[GridPolicy]) -> u64 {
        let per = self.policy_count() as u64;
        joint.iter().fold(0u64, |id, gp| id * per + self.policy_id(gp))
    }

    /// Number of joint policies, refused if above `cap`.
    pub fn checked_joint_count(&self, num_players: usize, cap: u64) -> Result<u64, PolicyError> {
        let count = self.joint_count(num_players);
        if count > cap as u128 {
            return Err(PolicyError::CombinatorialBlowup { count, cap });
        }
        Ok(count as u64)
    }

    /// All joint policies for `num_players` players in id order, refused if
    /// there are more than `cap`.
    pub fn enumerate_joint(
        &self,
        num_players: usize,
        cap: u64,
    ) -> Result<impl Iterator<Item = JointGridPolicy> + '_, PolicyError> {
        let count = self.checked_joint_count(num_players, cap)?;
        Ok((0..count).map(move |id| self.joint_from_id(num_players, id)))
    }
}

/// Compositions of `total` into `parts` nonnegative integers, in
/// lexicographic order.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=remaining {
            prefix.push(k);
            rec(remaining - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binomial(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
    }

    #[test]
    fn three_action_tenths_grid() {
        let g = QuantizedPolicySet::new(3, 1, 10).unwrap();
        // brute force: triples of tenths summing to one
        let mut brute = 0;
        for a in 0..=10 {
            for b in 0..=10 {
                for c in 0..=10 {
                    if a + b + c == 10 {
                        brute += 1;
                        assert!(g.index_of_numerators(&[a, b, c]).is_some());
                    }
                }
            }
        }
        assert_eq!(brute, 66);
        assert_eq!(g.num_points(), 66);
        assert_eq!(g.num_points() as u64, binomial(12, 2));
        for p in g.points() {
            for &v in p {
                assert!((v * 10.0 - (v * 10.0).round()).abs() < 1e-12 && (0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn coarsest_grid_is_deterministic_policies() {
        let g = QuantizedPolicySet::new(2, 1, 1).unwrap();
        let pts: Vec<_> = g.points().map(<[f64]>::to_vec).collect();
        assert_eq!(pts, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn grid_counts_and_blowup() {
        let g = QuantizedPolicySet::new(3, 2, 4).unwrap();
        assert_eq!(g.num_points(), 15);
        assert_eq!(g.policy_count(), 225);
        assert_eq!(g.enumerate(1000).unwrap().count(), 225);
        assert!(matches!(g.enumerate(100), Err(PolicyError::CombinatorialBlowup { count: 225, cap: 100 })));
        let big = QuantizedPolicySet::new(3, 5, 10).unwrap();
        assert!(big.enumerate(DEFAULT_ENUMERATION_CAP).is_err());
        assert!(QuantizedPolicySet::new(1, 1, 3).is_err());
        assert!(QuantizedPolicySet::new(3, 1, 0).is_err());
    }

    #[test]
    fn policy_ids_round_trip() {
        let g = QuantizedPolicySet::new(3, 3, 2).unwrap();
        for (id, gp) in g.enumerate(1000).unwrap().enumerate() {
            assert_eq!(g.policy_id(&gp), id as u64);
        }
        let joints: Vec<_> = g.enumerate_joint(2, 100_000).unwrap().take(3).collect();
        assert_eq!(joints[0], vec![GridPolicy(vec![0, 0, 0]); 2]);
        assert_eq!(joints[1][1], GridPolicy(vec![0, 0, 1]));
    }

    #[test]
    fn perturb_deterministic_rock() {
        let rock = StationaryPolicy::deterministic(3, &[0]);
        let p = rock.perturb(0.3);
        let expected = [0.7 + 0.1, 0.1, 0.1];
        for (a, b) in p.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn perturb_uniform_is_fixed_point() {
        let u = StationaryPolicy::uniform(2, 3);
        for rho in [0.01, 0.5, 0.99] {
            assert!(u.perturb(rho).distance(&u).unwrap() < 1e-15);
        }
    }

    #[test]
    fn distance_examples() {
        let a = JointPolicy(vec![StationaryPolicy::new(vec![vec![0.5, 0.5, 0.0]]).unwrap()]);
        let b = JointPolicy(vec![StationaryPolicy::new(vec![vec![0.4, 0.6, 0.0]]).unwrap()]);
        assert!((policy_distance(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(policy_distance(&a, &a).unwrap(), 0.0);
        let rock = JointPolicy(vec![StationaryPolicy::deterministic(3, &[0])]);
        let paper = JointPolicy(vec![StationaryPolicy::deterministic(3, &[1])]);
        assert_eq!(policy_distance(&rock, &paper).unwrap(), 1.0);
        let two = JointPolicy(vec![StationaryPolicy::uniform(2, 3)]);
        assert_eq!(policy_distance(&rock, &two), Err(PolicyError::ShapeMismatch));
    }

    #[test]
    fn projection_examples() {
        let g = QuantizedPolicySet::new(3, 1, 10).unwrap();
        // enumerate all 66 distances to (0.33, 0.33, 0.34)
        let target = [0.33, 0.33, 0.34];
        let dists: Vec<f64> = g
            .points()
            .map(|p| p.iter().zip(&target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .collect();
        let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let first = dists.iter().position(|&d| d <= min + 1e-12).unwrap();
        assert_eq!(g.project_row(&target), first);
        assert_eq!(g.numerators(first), &[3, 3, 4]);

        let g2 = QuantizedPolicySet::new(2, 1, 1).unwrap();
        assert_eq!(g2.point(g2.project_row(&[0.6, 0.4])), &[1.0, 0.0]);

        // exact tie between (5,2,3), (5,3,2) and (6,2,2): lowest index wins
        let mid = [0.5 + 0.1 / 3.0, 0.7 / 3.0, 0.7 / 3.0];
        assert_eq!(g.numerators(g.project_row(&mid)), &[5, 2, 3]);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let u = StationaryPolicy::uniform(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[u.sample_action(&mut rng, 0)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.005);
        }
        let rock = StationaryPolicy::deterministic(3, &[0]).perturb(0.3);
        let mut hits = 0;
        for _ in 0..100_000 {
            hits += (rock.sample_action(&mut rng, 0) == 0) as usize;
        }
        assert!((hits as f64 / 1e5 - 0.8).abs() < 0.01);
        let det = StationaryPolicy::deterministic(3, &[2]);
        assert!((0..100).all(|_| det.sample_action(&mut rng, 0) == 2));
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(matches!(
            StationaryPolicy::new(vec![vec![0.5, 0.6]]),
            Err(PolicyError::NotADistribution { state: 0, .. })
        ));
        assert!(matches!(
            StationaryPolicy::new(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(PolicyError::RaggedRow { state: 1, .. })
        ));
        assert!(serde_json::from_str::<StationaryPolicy>("[[1.2,-0.2]]").is_err());
        let p: StationaryPolicy = serde_json::from_str("[[0.25,0.75],[1,0]]").unwrap();
        assert_eq!(p.prob(1, 0), 1.0);
    }

    fn simplex_row(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, dim).prop_map(|w| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            let mut r: Vec<f64> = w.iter().map(|v| (v + 1e-9 / w.len() as f64) / s).collect();
            let tail: f64 = r[..r.len() - 1].iter().sum();
            let last = r.len() - 1;
            r[last] = (1.0 - tail).max(0.0);
            r
        })
    }

    proptest! {
        #[test]
        fn grid_covers_simplex(row in simplex_row(3), m in 1u32..12) {
            let g = QuantizedPolicySet::new(3, 1, m).unwrap();
            let k = g.project_row(&row);
            let d = g.point(k).iter().zip(&row).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            prop_assert!(d <= 1.0 / m as f64 + 1e-12);
        }

        #[test]
        fn projection_is_idempotent_on_grid(m in 1u32..10, seed in 0u64..1000) {
            let g = QuantizedPolicySet::new(4, 2, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gp = g.uniform_draw(&mut rng);
            prop_assert_eq!(g.project(&g.to_policy(&gp)), gp.clone());
            prop_assert_eq!(g.locate(&g.to_policy(&gp)), Some(gp));
        }

        #[test]
        fn perturbations_compose(row in simplex_row(4), r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let p = StationaryPolicy::new(vec![row]).unwrap();
            let twice = p.perturb(r1).perturb(r2);
            let once = p.perturb(r1 + r2 - r1 * r2);
            for (a, b) in twice.row(0).iter().zip(once.row(0)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn perturbation_moves_at_most_rho(row in simplex_row(3), rho in 0.0f64..1.0) {
            let p = StationaryPolicy::new(vec![row]).unwrap();
            let q = p.perturb(rho);
            prop_assert!(q.distance(&p).unwrap() <= rho + 1e-15);
            prop_assert!(q.row(0).iter().all(|&v| v >= rho / 3.0 - 1e-15));
            prop_assert!((q.row(0).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn distance_is_a_metric(a in simplex_row(3), b in simplex_row(3), c in simplex_row(3)) {
            let j = |r: &Vec<f64>| JointPolicy(vec![StationaryPolicy::new(vec![r.clone()]).unwrap()]);
            let (pa, pb, pc) = (j(&a), j(&b), j(&c));
            let ab = policy_distance(&pa, &pb).unwrap();
            prop_assert_eq!(ab, policy_distance(&pb, &pa).unwrap());
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= policy_distance(&pa, &pc).unwrap() + policy_distance(&pc, &pb).unwrap() + 1e-15);
        }
    }
}
