//! Convex penalty functions on the simplex and the supremum solver.
//!
//! A penalty `alpha` generates a cost function through
//! `C(q) = sup_p (sum_i p_i q_i - alpha(p))`, with the maximizer doubling as
//! the market's price vector and, with losses negated, as the weight vector
//! of a follow-the-regularized-leader learner.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::types::{project_to_simplex, ProbVector, QuantityVector, TOL};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Convex penalty over the probability simplex.
///
/// `Entropic(b)` is `b * sum_i p_i ln p_i` (the negative-entropy regularizer
/// behind the log market), `Quadratic(b)` is `b * sum_i p_i^2` (behind the
/// quadratic market), and `Custom` wraps arbitrary closures. A custom penalty
/// without an analytic gradient falls back to central differences of its
/// value, extended coordinate-wise off the simplex; constant offsets along
/// the all-ones direction cancel everywhere a gradient is consumed.
#[derive(Clone)]
pub enum PenaltyFunction {
    Entropic {
        b: f64,
    },
    Quadratic {
        b: f64,
    },
    Custom {
        value: ValueFn,
        gradient: Option<GradFn>,
    },
}

impl std::fmt::Debug for PenaltyFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Entropic { b } => write!(f, "Entropic {{ b: {b} }}"),
            Self::Quadratic { b } => write!(f, "Quadratic {{ b: {b} }}"),
            Self::Custom { gradient, .. } => write!(
                f,
                "Custom {{ gradient: {} }}",
                if gradient.is_some() {
                    "analytic"
                } else {
                    "finite-difference"
                }
            ),
        }
    }
}

impl PenaltyFunction {
    pub fn entropic(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "entropic b = {b} must be > 0"
            )));
        }
        Ok(Self::Entropic { b })
    }

    pub fn quadratic(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic b = {b} must be > 0"
            )));
        }
        Ok(Self::Quadratic { b })
    }

    pub fn custom(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn custom_with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        }
    }

    /// Penalty value at a point of the simplex.
    pub fn value(&self, p: &[f64]) -> f64 {
        match self {
            Self::Entropic { b } => {
                b * p
                    .iter()
                    .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
                    .sum::<f64>()
            }
            Self::Quadratic { b } => b * p.iter().map(|&x| x * x).sum::<f64>(),
            Self::Custom { value, .. } => value(p),
        }
    }

    /// Gradient on the interior; entropic entries are clamped away from zero
    /// so boundary iterates of the solver see a large finite pull inward.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Self::Entropic { b } => p.iter().map(|&x| b * (x.max(1e-300).ln() + 1.0)).collect(),
            Self::Quadratic { b } => p.iter().map(|&x| 2.0 * b * x).collect(),
            Self::Custom {
                gradient: Some(g), ..
            } => g(p),
            Self::Custom { value, .. } => {
                let h = TOL.finitediff_h;
                let mut out = Vec::with_capacity(p.len());
                let mut probe = p.to_vec();
                for i in 0..p.len() {
                    probe[i] = p[i] + h;
                    let up = value(&probe);
                    probe[i] = p[i] - h;
                    let down = value(&probe);
                    probe[i] = p[i];
                    out.push((up - down) / (2.0 * h));
                }
                out
            }
        }
    }

    /// Scale the penalty by `k > 0`; used to fold the learning rate into the
    /// regularizer, since (1/eta) * alpha has the same maximizer structure.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {k} must be > 0")));
        }
        Ok(match self {
            Self::Entropic { b } => Self::Entropic { b: b * k },
            Self::Quadratic { b } => Self::Quadratic { b: b * k },
            Self::Custom { value, gradient } => {
                let v = Arc::clone(value);
                let g = gradient.as_ref().map(Arc::clone);
                Self::Custom {
                    value: Arc::new(move |p: &[f64]| k * v(p)),
                    gradient: g.map(|g| {
                        Arc::new(move |p: &[f64]| {
                            g(p).into_iter().map(|x| k * x).collect::<Vec<f64>>()
                        }) as GradFn
                    }),
                }
            }
        })
    }

    /// Midpoint convexity spot-check on random interior pairs.
    pub fn spot_check_convexity(&self, n: usize, seed: u64) -> Result<()> {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..200 {
            let p = rng.simplex_point(n, 1e-4);
            let q = rng.simplex_point(n, 1e-4);
            let vp = self.value(&p);
            let vq = self.value(&q);
            for lambda in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = p
                    .iter()
                    .zip(q.iter())
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                let vm = self.value(&mix);
                if !(vm <= lambda * vp + (1.0 - lambda) * vq + 1e-9) {
                    return Err(Error::InvalidPenalty(format!(
                        "convexity violated: alpha(mix) = {vm} > {}",
                        lambda * vp + (1.0 - lambda) * vq
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of maximizing `sum_i p_i q_i - alpha(p)` over the simplex.
///
/// `kkt_lambda` and `kkt_mu` are the multipliers of the sum-to-one and
/// nonnegativity constraints; complementary slackness `mu_i * p_i = 0` holds
/// up to solver tolerance.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub prices: ProbVector,
    pub cost: f64,
    pub iterations: usize,
    pub kkt_lambda: f64,
    pub kkt_mu: Vec<f64>,
}

const MAX_SOLVER_ITERS: usize = 100_000;
/// Initial scale of the 1/k step schedule for the projected-gradient path.
const STEP_SCALE: f64 = 4.0;
/// Cap on the centered gradient's max-norm before stepping; penalties with
/// extended-real boundary values otherwise fling early iterates across the
/// simplex.
const GRAD_CLIP: f64 = 4.0;

/// Maximize `sum_i p_i q_i - alpha(p)` over the simplex, returning the
/// maximizer (the prices), the optimum value (the cost), and KKT multipliers.
///
/// Entropic penalties solve in closed form (softmax with max-shift),
/// quadratic penalties reduce to the exact sorted-threshold projection of
/// `q / 2b`, and custom penalties run projected gradient ascent from the
/// uniform start with a 1/k step schedule.
pub fn maximize(alpha: &PenaltyFunction, q: &QuantityVector) -> Result<SolveResult> {
    let n = q.len();
    if n == 1 {
        let p = ProbVector::vertex(1, 0);
        let cost = q[0] - alpha.value(p.as_slice());
        let lambda = q[0] - alpha.gradient(p.as_slice())[0];
        return Ok(SolveResult {
            prices: p,
            cost,
            iterations: 0,
            kkt_lambda: lambda,
            kkt_mu: vec![0.0],
        });
    }
    match alpha {
        PenaltyFunction::Entropic { b } => {
            let m = q
                .as_slice()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = q.as_slice().iter().map(|&x| ((x - m) / b).exp()).collect();
            let z: f64 = exps.iter().sum();
            let prices = ProbVector::new(exps.iter().map(|&e| e / z).collect())?;
            let cost = m + b * z.ln();
            Ok(SolveResult {
                prices,
                cost,
                iterations: 0,
                kkt_lambda: cost - b,
                kkt_mu: vec![0.0; n],
            })
        }
        PenaltyFunction::Quadratic { b } => {
            let scaled: Vec<f64> = q.as_slice().iter().map(|&x| x / (2.0 * b)).collect();
            let prices = project_to_simplex(&scaled)?;
            let support: Vec<usize> = (0..n).filter(|&i| prices[i] > 0.0).collect();
            let lambda =
                (support.iter().map(|&i| q[i]).sum::<f64>() - 2.0 * b) / support.len() as f64;
            let kkt_mu: Vec<f64> = (0..n)
                .map(|i| if prices[i] > 0.0 { 0.0 } else { lambda - q[i] })
                .collect();
            let cost = dot(prices.as_slice(), q.as_slice()) - alpha.value(prices.as_slice());
            Ok(SolveResult {
                prices,
                cost,
                iterations: 0,
                kkt_lambda: lambda,
                kkt_mu,
            })
        }
        PenaltyFunction::Custom { .. } => maximize_custom(alpha, q),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn maximize_custom(alpha: &PenaltyFunction, q: &QuantityVector) -> Result<SolveResult> {
    let n = q.len();
    let start = ProbVector::uniform(n);
    if !alpha.value(start.as_slice()).is_finite() {
        return Err(Error::InvalidPenalty(
            "penalty is non-finite at the uniform interior point".into(),
        ));
    }

    let objective_grad = |p: &[f64]| -> Vec<f64> {
        let g_alpha = alpha.gradient(p);
        (0..n).map(|i| q[i] - g_alpha[i]).collect()
    };

    let mut p = start.to_vec();
    for k in 1..=MAX_SOLVER_ITERS {
        let g = objective_grad(&p);
        // Removing the mean leaves the projection unchanged and makes the
        // clip act on the feasible component only.
        let mean = g.iter().sum::<f64>() / n as f64;
        let mut d: Vec<f64> = g.iter().map(|&x| x - mean).collect();

        let moved: Vec<f64> = p.iter().zip(g.iter()).map(|(a, b)| a + b).collect();
        let pg = project_to_simplex(&moved)?;
        let residual: f64 = pg
            .as_slice()
            .iter()
            .zip(p.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual < TOL.solver_eps {
            return finish_custom(alpha, q, p, k);
        }

        let max_abs = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if max_abs > GRAD_CLIP {
            let scale = GRAD_CLIP / max_abs;
            for x in &mut d {
                *x *= scale;
            }
        }
        let step = STEP_SCALE / k as f64;
        let next: Vec<f64> = p.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
        p = project_to_simplex(&next)?.to_vec();
    }

    let g = objective_grad(&p);
    let moved: Vec<f64> = p.iter().zip(g.iter()).map(|(a, b)| a + b).collect();
    let pg = project_to_simplex(&moved)?;
    let residual: f64 = pg
        .as_slice()
        .iter()
        .zip(p.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Err(Error::SolverDiverged {
        iterations: MAX_SOLVER_ITERS,
        residual,
        last_iterate: p,
    })
}

fn finish_custom(
    alpha: &PenaltyFunction,
    q: &QuantityVector,
    p: Vec<f64>,
    iterations: usize,
) -> Result<SolveResult> {
    let n = q.len();
    let cost = dot(&p, q.as_slice()) - alpha.value(&p);
    let g_alpha = alpha.gradient(&p);
    // Stationarity: q_i = dalpha/dp_i + lambda - mu_i with mu_i = 0 on the
    // support; lambda is averaged over supported coordinates.
    let support: Vec<usize> = (0..n).filter(|&i| p[i] > 1e-9).collect();
    let lambda =
        support.iter().map(|&i| q[i] - g_alpha[i]).sum::<f64>() / support.len().max(1) as f64;
    let kkt_mu: Vec<f64> = (0..n)
        .map(|i| {
            if p[i] > 1e-9 {
                0.0
            } else {
                (g_alpha[i] + lambda - q[i]).max(0.0)
            }
        })
        .collect();
    Ok(SolveResult {
        prices: ProbVector::new(p)?,
        cost,
        iterations,
        kkt_lambda: lambda,
        kkt_mu,
    })
}

/// Exact price function of the quadratic market by iterative active-set
/// elimination on the KKT system
/// `p_i = 1/N + (q_i + mu_i)/2b - sum_j (q_j + mu_j)/2bN`, `p_i mu_i = 0`,
/// `p >= 0`, `mu >= 0`.
///
/// Each round solves the system with `mu = 0` on the current support,
/// drops the most negative price (ties to the lowest index), and repeats;
/// at most N-1 rounds. This route is independent of the sorted-threshold
/// projection used by [`maximize`], and the two are cross-checked in tests.
pub fn quad_price_closed_form(b: f64, q: &QuantityVector) -> Result<(ProbVector, Vec<f64>)> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("quad b = {b} must be > 0")));
    }
    let n = q.len();
    if n == 1 {
        return Ok((ProbVector::vertex(1, 0), vec![0.0]));
    }

    let mut support: Vec<usize> = (0..n).collect();
    loop {
        let m = support.len() as f64;
        let sum_q: f64 = support.iter().map(|&i| q[i]).sum();
        let lambda = (sum_q - 2.0 * b) / m;

        let mut worst: Option<(usize, f64)> = None;
        let mut prices_on_support = Vec::with_capacity(support.len());
        for &i in &support {
            let p_i = (q[i] - lambda) / (2.0 * b);
            prices_on_support.push((i, p_i));
            if p_i < 0.0 {
                let better = match worst {
                    None => true,
                    Some((_, w)) => p_i < w,
                };
                if better {
                    worst = Some((i, p_i));
                }
            }
        }

        match worst {
            Some((drop, _)) if support.len() > 1 => {
                support.retain(|&i| i != drop);
            }
            _ => {
                let mut p = vec![0.0; n];
                for (i, p_i) in prices_on_support {
                    p[i] = p_i.max(0.0);
                }
                let mu: Vec<f64> = (0..n)
                    .map(|i| {
                        if support.contains(&i) {
                            0.0
                        } else {
                            lambda - q[i]
                        }
                    })
                    .collect();
                return Ok((ProbVector::new(p)?, mu));
            }
        }
    }
}

/// The penalty's range `sup alpha - inf alpha` over the simplex; it bounds
/// the worst-case loss of the market the penalty generates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyRange {
    pub value: f64,
    /// True for the analytic tagged kinds; custom penalties get a sampled
    /// lower bound on the true range.
    pub exact: bool,
}

/// Range of the penalty over the N-simplex.
///
/// Entropic: `b ln N`. Quadratic: `b (N-1)/N`. Custom: projected-gradient
/// maximization and minimization of alpha from 50 random starts, reported
/// as an estimate.
pub fn penalty_range(alpha: &PenaltyFunction, n: usize) -> PenaltyRange {
    if n <= 1 {
        return PenaltyRange {
            value: 0.0,
            exact: true,
        };
    }
    match alpha {
        PenaltyFunction::Entropic { b } => PenaltyRange {
            value: b * (n as f64).ln(),
            exact: true,
        },
        PenaltyFunction::Quadratic { b } => PenaltyRange {
            value: b * (n as f64 - 1.0) / n as f64,
            exact: true,
        },
        PenaltyFunction::Custom { .. } => {
            let mut rng = SplitMix64::new(0x5EED);
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            for start_idx in 0..50 {
                let start = if start_idx == 0 {
                    ProbVector::uniform(n).to_vec()
                } else {
                    rng.simplex_point(n, 0.0)
                };
                for sign in [1.0, -1.0] {
                    let p = ascend_value(alpha, start.clone(), sign);
                    let v = alpha.value(&p);
                    if v.is_finite() {
                        hi = hi.max(v);
                        lo = lo.min(v);
                    }
                }
            }
            // Vertices often carry the extremes; include them outright.
            for i in 0..n {
                let v = alpha.value(ProbVector::vertex(n, i).as_slice());
                if v.is_finite() {
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
            }
            PenaltyRange {
                value: (hi - lo).max(0.0),
                exact: false,
            }
        }
    }
}

/// Projected gradient on `sign * alpha` for the range estimate; shorter
/// budget than the market solve since only the value matters.
fn ascend_value(alpha: &PenaltyFunction, mut p: Vec<f64>, sign: f64) -> Vec<f64> {
    let n = p.len();
    let mut best = p.clone();
    let mut best_v = sign * alpha.value(&p);
    for k in 1..=2000usize {
        let g = alpha.gradient(&p);
        let mean = g.iter().sum::<f64>() / n as f64;
        let mut d: Vec<f64> = g.iter().map(|&x| sign * (x - mean)).collect();
        let max_abs = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if max_abs > GRAD_CLIP {
            let scale = GRAD_CLIP / max_abs;
            for x in &mut d {
                *x *= scale;
            }
        }
        let step = STEP_SCALE / k as f64;
        let next: Vec<f64> = p.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
        p = match project_to_simplex(&next) {
            Ok(v) => v.to_vec(),
            Err(_) => break,
        };
        let v = sign * alpha.value(&p);
        if v.is_finite() && v > best_v {
            best_v = v;
            best = p.clone();
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Tolerances;

    fn qv(v: &[f64]) -> QuantityVector {
        QuantityVector::new(v.to_vec()).unwrap()
    }

    fn entropic_as_custom(b: f64) -> PenaltyFunction {
        PenaltyFunction::custom_with_gradient(
            move |p: &[f64]| {
                b * p
                    .iter()
                    .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
                    .sum::<f64>()
            },
            move |p: &[f64]| p.iter().map(|&x| b * (x.max(1e-300).ln() + 1.0)).collect(),
        )
    }

    #[test]
    fn entropic_symmetric_point() {
        let r = maximize(&PenaltyFunction::entropic(1.0).unwrap(), &qv(&[0.0, 0.0])).unwrap();
        assert!((r.prices[0] - 0.5).abs() < 1e-15);
        assert!((r.cost - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn entropic_softmax_point() {
        let r = maximize(&PenaltyFunction::entropic(1.0).unwrap(), &qv(&[1.0, 0.0])).unwrap();
        let e = std::f64::consts::E;
        assert!((r.prices[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((r.prices[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((r.cost - (e + 1.0).ln()).abs() < 1e-15);
        assert!((r.cost - 1.313_261_687_518_222_8).abs() < 1e-12);
    }

    #[test]
    fn entropic_overflow_safe() {
        let r = maximize(&PenaltyFunction::entropic(1.0).unwrap(), &qv(&[800.0, 0.0])).unwrap();
        assert!(r.cost.is_finite());
        assert!((r.cost - 800.0).abs() < 1e-9);
        assert!((r.prices[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_active_set_example() {
        // Hand KKT solve: support {1,2}, lambda = -1/2, mu_3 = 1/2.
        let r = maximize(
            &PenaltyFunction::quadratic(1.0).unwrap(),
            &qv(&[1.0, 0.0, -1.0]),
        )
        .unwrap();
        assert!((r.prices[0] - 0.75).abs() < 1e-12);
        assert!((r.prices[1] - 0.25).abs() < 1e-12);
        assert!(r.prices[2].abs() < 1e-12);
        assert!((r.cost - 0.125).abs() < 1e-12);
        assert!((r.kkt_lambda + 0.5).abs() < 1e-12);
        assert!((r.kkt_mu[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_grid_search_cross_check() {
        let alpha = PenaltyFunction::quadratic(1.0).unwrap();
        let q = qv(&[1.0, 0.0, -1.0]);
        let r = maximize(&alpha, &q).unwrap();
        // Dense grid over the 3-simplex must not beat the reported optimum.
        let steps = 200;
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let p = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    (steps - i - j) as f64 / steps as f64,
                ];
                let v = p[0] * q[0] + p[1] * q[1] + p[2] * q[2] - alpha.value(&p);
                grid_best = grid_best.max(v);
            }
        }
        assert!(r.cost >= grid_best - 1e-9);
        assert!(r.cost <= grid_best + 0.01);
    }

    #[test]
    fn quad_closed_form_examples() {
        let (p, mu) = quad_price_closed_form(1.0, &qv(&[0.0, 0.0, 0.0])).unwrap();
        for i in 0..3 {
            assert!((p[i] - 1.0 / 3.0).abs() < 1e-15);
            assert_eq!(mu[i], 0.0);
        }

        let (p, mu) = quad_price_closed_form(1.0, &qv(&[1.0, 0.0, -1.0])).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!(p[2].abs() < 1e-12);
        assert!((mu[2] - 0.5).abs() < 1e-12);

        // Interior case: p_i = 1/3 + q_i/4 - (sum q)/12.
        let q = [0.1, 0.2, 0.3];
        let (p, mu) = quad_price_closed_form(2.0, &qv(&q)).unwrap();
        let sum: f64 = q.iter().sum();
        for i in 0..3 {
            let expected = 1.0 / 3.0 + q[i] / 4.0 - sum / 12.0;
            assert!((p[i] - expected).abs() < 1e-14);
            assert_eq!(mu[i], 0.0);
        }
    }

    #[test]
    fn quad_closed_form_matches_solver_on_random_inputs() {
        let mut rng = SplitMix64::new(2024);
        let alpha = PenaltyFunction::quadratic(1.0).unwrap();
        for _ in 0..1000 {
            let n = 2 + rng.below(5);
            let q = qv(&rng.vec_range(n, -3.0, 3.0));
            let (p_cf, mu) = quad_price_closed_form(1.0, &q).unwrap();
            let r = maximize(&alpha, &q).unwrap();
            assert!(p_cf.max_abs_diff(&r.prices) < 1e-8);
            for i in 0..n {
                assert!(mu[i] >= -1e-10);
                assert!(mu[i] * p_cf[i] <= 1e-8);
            }
        }
    }

    #[test]
    fn custom_solver_matches_softmax() {
        let alpha = entropic_as_custom(1.0);
        let reference = PenaltyFunction::entropic(1.0).unwrap();
        let mut rng = SplitMix64::new(7);
        for trial in 0..100 {
            let n = 2 + rng.below(3);
            let q = qv(&rng.vec_range(n, -1.0, 1.0));
            let got = maximize(&alpha, &q).unwrap();
            let want = maximize(&reference, &q).unwrap();
            assert!(
                got.prices.max_abs_diff(&want.prices) < 1e-5,
                "trial {trial}: {:?} vs {:?}",
                got.prices,
                want.prices
            );
            assert!((got.cost - want.cost).abs() < 1e-5);
            for i in 0..n {
                assert!(got.kkt_mu[i] >= -1e-10);
                assert!(got.kkt_mu[i] * got.prices[i] <= 1e-8);
            }
        }
    }

    #[test]
    fn custom_solver_matches_quadratic_with_boundary_solution() {
        let alpha = PenaltyFunction::custom_with_gradient(
            |p: &[f64]| p.iter().map(|&x| x * x).sum::<f64>(),
            |p: &[f64]| p.iter().map(|&x| 2.0 * x).collect(),
        );
        let got = maximize(&alpha, &qv(&[1.0, 0.0, -1.0])).unwrap();
        assert!((got.prices[0] - 0.75).abs() < 1e-5);
        assert!((got.prices[1] - 0.25).abs() < 1e-5);
        assert!(got.prices[2].abs() < 1e-5);
    }

    #[test]
    fn custom_rejects_non_finite_penalty() {
        let alpha = PenaltyFunction::custom(|_| f64::INFINITY);
        assert!(matches!(
            maximize(&alpha, &qv(&[0.0, 0.0])),
            Err(Error::InvalidPenalty(_))
        ));
    }

    #[test]
    fn custom_non_convergence_reports_divergence_with_last_iterate() {
        // A pseudo-gradient circulating around a point away from the uniform
        // start: iterates orbit forever and the residual never reaches
        // tolerance.
        let alpha = PenaltyFunction::custom_with_gradient(
            |_| 0.0,
            |p: &[f64]| {
                let d = [p[0] - 0.5, p[1] - 0.3, p[2] - 0.2];
                vec![d[1] - d[2], d[2] - d[0], d[0] - d[1]]
            },
        );
        match maximize(&alpha, &qv(&[0.0, 0.0, 0.0])) {
            Err(Error::SolverDiverged {
                iterations,
                residual,
                last_iterate,
            }) => {
                assert_eq!(iterations, 100_000);
                assert!(residual >= 1e-8);
                let sum: f64 = last_iterate.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn custom_finite_difference_gradient_fallback() {
        // Quadratic value without an analytic gradient.
        let alpha = PenaltyFunction::custom(|p: &[f64]| p.iter().map(|&x| x * x).sum::<f64>());
        let got = maximize(&alpha, &qv(&[1.0, 0.0, -1.0])).unwrap();
        assert!((got.prices[0] - 0.75).abs() < 1e-4);
        assert!((got.prices[1] - 0.25).abs() < 1e-4);
    }

    #[test]
    fn single_outcome_degenerates_to_point_mass() {
        let alpha = PenaltyFunction::entropic(1.0).unwrap();
        let r = maximize(&alpha, &qv(&[3.0])).unwrap();
        assert_eq!(r.prices.as_slice(), &[1.0]);
        assert!((r.cost - 3.0).abs() < 1e-15);
        assert_eq!(penalty_range(&alpha, 1).value, 0.0);
    }

    #[test]
    fn penalty_range_analytic_values() {
        let ent = penalty_range(&PenaltyFunction::entropic(1.0).unwrap(), 4);
        assert!((ent.value - 4.0f64.ln()).abs() < 1e-15);
        assert!(ent.exact);

        let quad = penalty_range(&PenaltyFunction::quadratic(1.0).unwrap(), 2);
        assert!((quad.value - 0.5).abs() < 1e-15);
        assert!(quad.exact);
    }

    #[test]
    fn penalty_range_custom_estimate() {
        let alpha = PenaltyFunction::custom_with_gradient(
            |p: &[f64]| p.iter().map(|&x| x * x).sum::<f64>(),
            |p: &[f64]| p.iter().map(|&x| 2.0 * x).collect(),
        );
        let r = penalty_range(&alpha, 3);
        assert!(!r.exact);
        // True range is (N-1)/N = 2/3; the estimate may only undershoot.
        assert!(r.value <= 2.0 / 3.0 + 1e-6);
        assert!(r.value > 2.0 / 3.0 - 1e-3);
    }

    #[test]
    fn convexity_spot_check_accepts_and_rejects() {
        assert!(PenaltyFunction::entropic(1.0)
            .unwrap()
            .spot_check_convexity(3, 1)
            .is_ok());
        assert!(PenaltyFunction::quadratic(2.0)
            .unwrap()
            .spot_check_convexity(4, 2)
            .is_ok());
        let concave = PenaltyFunction::custom(|p: &[f64]| -p.iter().map(|&x| x * x).sum::<f64>());
        assert!(concave.spot_check_convexity(3, 3).is_err());
    }

    #[test]
    fn envelope_gradient_of_cost_equals_prices() {
        // dC/dq_i = p_i(q), checked by central differences for both kinds.
        let h = Tolerances::new().finitediff_h;
        let mut rng = SplitMix64::new(31);
        for alpha in [
            PenaltyFunction::entropic(1.0).unwrap(),
            PenaltyFunction::quadratic(1.0).unwrap(),
        ] {
            for _ in 0..500 {
                let n = 2 + rng.below(3);
                let q = rng.vec_range(n, -3.0, 3.0);
                let r = maximize(&alpha, &qv(&q)).unwrap();
                for i in 0..n {
                    let mut up = q.clone();
                    up[i] += h;
                    let mut down = q.clone();
                    down[i] -= h;
                    let fd = (maximize(&alpha, &qv(&up)).unwrap().cost
                        - maximize(&alpha, &qv(&down)).unwrap().cost)
                        / (2.0 * h);
                    assert!(
                        (fd - r.prices[i]).abs() < 1e-5,
                        "envelope gap {} for {:?}",
                        (fd - r.prices[i]).abs(),
                        alpha
                    );
                }
            }
        }
    }

    #[test]
    fn grid_dominance_small() {
        // Coarse version of the acceptance oracle: no simplex grid point may
        // beat the solver's optimum.
        let mut rng = SplitMix64::new(5);
        for alpha in [
            PenaltyFunction::entropic(1.0).unwrap(),
            PenaltyFunction::quadratic(1.0).unwrap(),
        ] {
            for _ in 0..5 {
                let q = qv(&rng.vec_range(3, -2.0, 2.0));
                let best = maximize(&alpha, &q).unwrap().cost;
                let steps = 40;
                for i in 0..=steps {
                    for j in 0..=(steps - i) {
                        let p = [
                            i as f64 / steps as f64,
                            j as f64 / steps as f64,
                            (steps - i - j) as f64 / steps as f64,
                        ];
                        let v = dot(&p, q.as_slice()) - alpha.value(&p);
                        assert!(best >= v - 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_b() {
        assert!(PenaltyFunction::entropic(0.0).is_err());
        assert!(PenaltyFunction::quadratic(-1.0).is_err());
        assert!(quad_price_closed_form(0.0, &qv(&[0.0, 0.0])).is_err());
    }
}
