//! Shared value types and simplex arithmetic.
//!
//! All probabilities and share quantities are `f64`. Every numeric tolerance
//! used by the solvers and bound checks lives in [`Tolerances`] so the checks
//! stay auditable in one place.

use crate::error::{Error, Result};

/// Numeric tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a probability vector's sum from 1.
    pub simplex_eps: f64,
    /// Stopping tolerance for iterative solvers (projected gradient norm).
    pub solver_eps: f64,
    /// Step used by finite-difference derivative estimates.
    pub finitediff_h: f64,
    /// Tolerance for equality assertions between two computed quantities.
    pub equality_eps: f64,
}

impl Tolerances {
    pub const fn new() -> Self {
        Self {
            simplex_eps: 1e-9,
            solver_eps: 1e-8,
            finitediff_h: 1e-5,
            equality_eps: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.simplex_eps,
            self.solver_eps,
            self.finitediff_h,
            self.equality_eps,
        ];
        if all.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::new()
    }
}

/// Default tolerances used when an operation does not take them explicitly.
pub const TOL: Tolerances = Tolerances::new();

/// Negative slack below zero that construction repairs instead of rejecting.
const NEG_CLAMP: f64 = 1e-12;

/// A point on the probability simplex: market prices, learner weights,
/// or a reported belief.
///
/// Entries in [-1e-12, 0] are clamped to exactly 0 on construction and the
/// vector is renormalized; anything further below zero, or a sum further
/// than 1e-9 from 1, is an error rather than a repair.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(mut entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "probability vector has non-finite entry".into(),
            ));
        }
        for x in &mut entries {
            if *x < 0.0 {
                if *x < -NEG_CLAMP {
                    return Err(Error::InvalidInput(format!(
                        "probability entry {x} below -1e-12"
                    )));
                }
                *x = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > TOL.simplex_eps {
            return Err(Error::InvalidInput(format!(
                "probability vector sums to {sum}, not 1"
            )));
        }
        for x in &mut entries {
            *x /= sum;
        }
        Ok(Self { entries })
    }

    /// Uniform distribution over n outcomes.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self {
            entries: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on outcome i.
    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut entries = vec![0.0; n];
        entries[i] = 1.0;
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.entries.clone()
    }

    /// True when every entry is at least `floor`.
    pub fn min_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute per-entry difference from another vector.
    pub fn max_abs_diff(&self, other: &ProbVector) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// Outstanding shares per outcome. Entries may be negative (short positions).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityVector {
    entries: Vec<f64>,
}

impl QuantityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty quantity vector".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "quantity vector has non-finite entry".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        Self {
            entries: vec![0.0; n],
        }
    }

    /// r shares of a single outcome, zero elsewhere.
    pub fn single(n: usize, outcome: usize, shares: f64) -> Self {
        assert!(outcome < n);
        let mut entries = vec![0.0; n];
        entries[outcome] = shares;
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.entries.clone()
    }

    pub fn add(&self, other: &QuantityVector) -> QuantityVector {
        QuantityVector {
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn neg(&self) -> QuantityVector {
        QuantityVector {
            entries: self.entries.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> QuantityVector {
        QuantityVector {
            entries: self.entries.iter().map(|x| x * k).collect(),
        }
    }

    /// q + k per coordinate.
    pub fn shift(&self, k: f64) -> QuantityVector {
        QuantityVector {
            entries: self.entries.iter().map(|x| x + k).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for QuantityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// Per-expert, per-round losses in [0, 1]: the adversarial input stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    rows: Vec<Vec<f64>>,
    n_experts: usize,
}

impl LossMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("loss matrix has no rounds".into()));
        }
        let n_experts = rows[0].len();
        if n_experts == 0 {
            return Err(Error::InvalidInput("loss matrix has no experts".into()));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_experts {
                return Err(Error::InvalidInput(format!(
                    "row {t} has {} entries, expected {n_experts}",
                    row.len()
                )));
            }
            for &x in row {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidInput(format!(
                        "loss {x} at round {t} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { rows, n_experts })
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    pub fn experts(&self) -> usize {
        self.n_experts
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Sub-matrix of rounds start..end.
    pub fn slice_rounds(&self, start: usize, end: usize) -> LossMatrix {
        LossMatrix {
            rows: self.rows[start..end].to_vec(),
            n_experts: self.n_experts,
        }
    }
}

/// Exact Euclidean projection onto the probability simplex via the
/// sorted-threshold algorithm. Ties in the sort are broken by original
/// index so the scan order is deterministic.
pub fn project_to_simplex(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry".into()));
    }
    let n = v.len();
    if n == 1 {
        return Ok(ProbVector { entries: vec![1.0] });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[j].partial_cmp(&v[i]).unwrap().then(i.cmp(&j)));

    // Largest rho with v_(rho) - (prefix_sum - 1)/rho > 0.
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        cumsum += v[idx];
        let candidate = (cumsum - 1.0) / (rank + 1) as f64;
        if v[idx] - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }

    let entries: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    // The threshold construction puts the sum within roundoff of 1.
    ProbVector::new(entries)
}

/// Shannon entropy -sum p_i ln p_i, with 0 ln 0 := 0.
pub fn entropy(p: &ProbVector) -> f64 {
    p.as_slice()
        .iter()
        .map(|&x| if x > 0.0 { -x * x.ln() } else { 0.0 })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    /// Brute-force oracle: refine a grid search over the simplex for the
    /// closest point to v. Independent of the sorted-threshold route.
    fn project_oracle_3(v: &[f64; 3]) -> [f64; 3] {
        let dist2 =
            |p: &[f64; 3]| -> f64 { p.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum() };
        let mut best = [1.0 / 3.0; 3];
        let mut best_d = dist2(&best);
        let mut center = best;
        let mut radius = 1.0;
        for _ in 0..12 {
            let steps = 40;
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = (center[0] - radius + 2.0 * radius * i as f64 / steps as f64).max(0.0);
                    let b = (center[1] - radius + 2.0 * radius * j as f64 / steps as f64).max(0.0);
                    if a + b > 1.0 {
                        continue;
                    }
                    let p = [a, b, 1.0 - a - b];
                    let d = dist2(&p);
                    if d < best_d {
                        best_d = d;
                        best = p;
                    }
                }
            }
            center = best;
            radius /= 8.0;
        }
        best
    }

    #[test]
    fn projection_identity_on_simplex_point() {
        let p = project_to_simplex(&[0.2, 0.3, 0.5]).unwrap();
        assert!(p.max_abs_diff(&ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap()) < 1e-12);
    }

    #[test]
    fn projection_dominant_coordinate() {
        let p = project_to_simplex(&[2.0, 0.0, 0.0]).unwrap();
        assert!(p.max_abs_diff(&ProbVector::vertex(3, 0)) < 1e-12);
    }

    #[test]
    fn projection_matches_grid_oracle() {
        // Frozen from the brute-force refinement oracle below.
        let v = [5.0 / 6.0, 1.0 / 3.0, -1.0 / 6.0];
        let oracle = project_oracle_3(&v);
        assert!((oracle[0] - 0.75).abs() < 1e-6);
        assert!((oracle[1] - 0.25).abs() < 1e-6);
        assert!(oracle[2].abs() < 1e-6);

        let p = project_to_simplex(&v).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!(p[2].abs() < 1e-12);
    }

    #[test]
    fn projection_oracle_random_cross_check() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let v = [
                rng.range(-1.5, 1.5),
                rng.range(-1.5, 1.5),
                rng.range(-1.5, 1.5),
            ];
            let fast = project_to_simplex(&v).unwrap();
            let oracle = project_oracle_3(&v);
            for i in 0..3 {
                assert!(
                    (fast[i] - oracle[i]).abs() < 1e-5,
                    "coordinate {i}: {} vs {}",
                    fast[i],
                    oracle[i]
                );
            }
        }
    }

    #[test]
    fn projection_rejects_non_finite() {
        assert!(project_to_simplex(&[f64::NAN, 0.0]).is_err());
        assert!(project_to_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn entropy_uniform_two() {
        let h = entropy(&ProbVector::uniform(2));
        assert!((h - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_degenerate_zero() {
        let h = entropy(&ProbVector::new(vec![1.0, 0.0]).unwrap());
        assert_eq!(h, 0.0);
    }

    /// x ln x via Simpson quadrature of its derivative, d/dt (t ln t) = ln t + 1.
    fn x_ln_x_quadrature(x: f64) -> f64 {
        let steps = 20_000;
        let a = 1.0;
        let h = (x - a) / steps as f64;
        let f = |t: f64| t.ln() + 1.0;
        let mut sum = f(a) + f(x);
        for k in 1..steps {
            let t = a + k as f64 * h;
            sum += if k % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        sum * h / 3.0
    }

    #[test]
    fn entropy_direct_value_vs_quadrature() {
        let p = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let h = entropy(&p);
        let oracle = -(x_ln_x_quadrature(0.6) + x_ln_x_quadrature(0.4));
        assert!(
            (h - oracle).abs() < 1e-9,
            "entropy {h} vs quadrature {oracle}"
        );
        assert!((h - 0.6730116670092565).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounded_by_log_n() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..1000 {
            let n = 2 + rng.below(6);
            let p = ProbVector::new(rng.simplex_point(n, 0.0)).unwrap();
            assert!(entropy(&p) <= (n as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn prob_vector_clamps_tiny_negatives() {
        let p = ProbVector::new(vec![1.0, -5e-13, 0.0]).unwrap();
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn prob_vector_rejects_larger_violations() {
        assert!(ProbVector::new(vec![1.0, -1e-6]).is_err());
        assert!(ProbVector::new(vec![0.6, 0.3]).is_err());
    }

    #[test]
    fn loss_matrix_validates_range() {
        assert!(LossMatrix::new(vec![vec![0.5, 1.1]]).is_err());
        assert!(LossMatrix::new(vec![vec![0.5, -0.1]]).is_err());
        assert!(LossMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn tolerances_validate() {
        assert!(TOL.validate().is_ok());
        let bad = Tolerances {
            simplex_eps: 0.0,
            ..TOL
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn projection_idempotent(raw in proptest::collection::vec(-10.0f64..10.0, 2..8)) {
            let p = project_to_simplex(&raw).unwrap();
            let again = project_to_simplex(p.as_slice()).unwrap();
            prop_assert!(p.max_abs_diff(&again) < TOL.equality_eps);
        }

        #[test]
        fn projection_output_is_valid(raw in proptest::collection::vec(-10.0f64..10.0, 2..8)) {
            let p = project_to_simplex(&raw).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < TOL.simplex_eps);
            prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
        }
    }
}
