//! Cost-function-based market makers.
//!
//! A market is a potential function `C` over outstanding share quantities:
//! a trade of bundle `r` costs `C(q + r) - C(q)` and the instantaneous
//! prices are the gradient of `C`. Validity (prices nonnegative, summing to
//! one) is equivalent to differentiability, increasing monotonicity, and
//! positive translation invariance of `C`, which [`check_validity`] probes
//! numerically.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::penalty::{maximize, quad_price_closed_form, PenaltyFunction};
use crate::rng::SplitMix64;
use crate::types::{ProbVector, QuantityVector, TOL};

type RawCostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type RawPriceFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Pricing {
    Lmsr {
        b: f64,
    },
    Quad {
        b: f64,
    },
    Penalty(PenaltyFunction),
    /// Arbitrary cost/price closures; nothing about them is assumed valid.
    /// This is the hook for feeding counterexamples to the validity checker.
    Raw {
        cost: RawCostFn,
        prices: RawPriceFn,
    },
}

/// A cost-function market maker over `n` outcomes.
///
/// `phi_bound` is an analytic bound on the summed absolute price
/// sensitivities `sum_ij |dp_i/dq_j|`; `loss_bound` is an analytic bound on
/// the maker's worst-case loss measured from `C(0)`. Both are present for
/// the built-in log and quadratic markets and absent for custom ones, where
/// [`estimate_phi`] and the penalty range provide sampled substitutes.
#[derive(Clone)]
pub struct CostFunction {
    pricing: Pricing,
    n: usize,
    penalty: Option<PenaltyFunction>,
    pub phi_bound: Option<f64>,
    pub loss_bound: Option<f64>,
}

impl std::fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.pricing {
            Pricing::Lmsr { b } => format!("Lmsr {{ b: {b} }}"),
            Pricing::Quad { b } => format!("Quad {{ b: {b} }}"),
            Pricing::Penalty(p) => format!("Penalty({p:?})"),
            Pricing::Raw { .. } => "Raw".to_string(),
        };
        write!(f, "CostFunction {{ {kind}, n: {} }}", self.n)
    }
}

/// Log market maker: `C(q) = b ln sum_i e^(q_i / b)`, softmax prices,
/// price-sensitivity bound `2/b`, worst-case loss `b ln N` from the uniform
/// start.
pub fn make_lmsr(b: f64, n: usize) -> Result<CostFunction> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("lmsr b = {b} must be > 0")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "lmsr needs n >= 2, got {n}"
        )));
    }
    Ok(CostFunction {
        pricing: Pricing::Lmsr { b },
        n,
        penalty: Some(PenaltyFunction::entropic(b)?),
        phi_bound: Some(2.0 / b),
        loss_bound: Some(b * (n as f64).ln()),
    })
}

/// Quadratic market maker: `C(q) = sup_p (p . q - b sum p_i^2)`, exact
/// active-set prices, sensitivity bound `(N^2 - 1)/(2b)`, worst-case loss
/// `b (N-1)/N`.
pub fn make_quad(b: f64, n: usize) -> Result<CostFunction> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("quad b = {b} must be > 0")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "quad needs n >= 2, got {n}"
        )));
    }
    Ok(CostFunction {
        pricing: Pricing::Quad { b },
        n,
        penalty: Some(PenaltyFunction::quadratic(b)?),
        phi_bound: Some((n as f64 * n as f64 - 1.0) / (2.0 * b)),
        loss_bound: Some(b * (n as f64 - 1.0) / n as f64),
    })
}

/// Market maker generated by an arbitrary convex penalty; cost and prices
/// delegate to the supremum solver. The penalty must pass its convexity
/// spot-check. No analytic bounds are attached.
pub fn make_custom(penalty: PenaltyFunction, n: usize) -> Result<CostFunction> {
    if n < 1 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    penalty.spot_check_convexity(n, 0xC0)?;
    Ok(CostFunction {
        pricing: Pricing::Penalty(penalty.clone()),
        n,
        penalty: Some(penalty),
        phi_bound: None,
        loss_bound: None,
    })
}

impl CostFunction {
    /// Wrap raw cost/price closures with no validity assumed. Market
    /// operations that need a distribution will reject invalid prices;
    /// the intended consumer is [`check_validity`].
    pub fn from_fns(
        n: usize,
        cost: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        prices: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        CostFunction {
            pricing: Pricing::Raw {
                cost: Arc::new(cost),
                prices: Arc::new(prices),
            },
            n,
            penalty: None,
            phi_bound: None,
            loss_bound: None,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.n
    }

    pub fn penalty(&self) -> Option<&PenaltyFunction> {
        self.penalty.as_ref()
    }

    /// Money wagered at quantity vector q.
    pub fn cost(&self, q: &QuantityVector) -> Result<f64> {
        self.check_len(q)?;
        match &self.pricing {
            Pricing::Lmsr { b } => {
                let m = q
                    .as_slice()
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = q.as_slice().iter().map(|&x| ((x - m) / b).exp()).sum();
                Ok(m + b * z.ln())
            }
            Pricing::Quad { b } => {
                let (p, _) = quad_price_closed_form(*b, q)?;
                let lin: f64 = p
                    .as_slice()
                    .iter()
                    .zip(q.as_slice())
                    .map(|(a, c)| a * c)
                    .sum();
                Ok(lin - b * p.as_slice().iter().map(|&x| x * x).sum::<f64>())
            }
            Pricing::Penalty(alpha) => Ok(maximize(alpha, q)?.cost),
            Pricing::Raw { cost, .. } => Ok(cost(q.as_slice())),
        }
    }

    /// Instantaneous prices as a probability distribution.
    pub fn prices(&self, q: &QuantityVector) -> Result<ProbVector> {
        ProbVector::new(self.price_values(q)?)
    }

    /// Price vector without the distribution validation, which raw cost
    /// functions may fail.
    pub fn price_values(&self, q: &QuantityVector) -> Result<Vec<f64>> {
        self.check_len(q)?;
        match &self.pricing {
            Pricing::Lmsr { b } => {
                let m = q
                    .as_slice()
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = q.as_slice().iter().map(|&x| ((x - m) / b).exp()).collect();
                let z: f64 = exps.iter().sum();
                Ok(exps.into_iter().map(|e| e / z).collect())
            }
            Pricing::Quad { b } => Ok(quad_price_closed_form(*b, q)?.0.to_vec()),
            Pricing::Penalty(alpha) => Ok(maximize(alpha, q)?.prices.to_vec()),
            Pricing::Raw { prices, .. } => Ok(prices(q.as_slice())),
        }
    }

    fn check_len(&self, q: &QuantityVector) -> Result<()> {
        if q.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "quantity vector has {} entries, market has {}",
                q.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Outcome of probing one validity property.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub passed: bool,
    pub worst_violation: f64,
    pub checked: usize,
}

/// Numeric validity report: differentiability (finite differences of cost
/// match prices), increasing monotonicity, and positive translation
/// invariance, each with its worst observed violation.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub differentiability: PropertyCheck,
    pub monotonicity: PropertyCheck,
    pub translation_invariance: PropertyCheck,
    /// Sampled points where the differentiability gap exceeded tolerance but
    /// the price support changes within the stencil: active-set boundaries
    /// of piecewise-linear prices, flagged rather than failed.
    pub boundary_points: usize,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.differentiability.passed
            && self.monotonicity.passed
            && self.translation_invariance.passed
    }
}

const DIFF_TOL: f64 = 1e-4;
const MONO_TOL: f64 = 1e-9;
const TRANSLATION_TOL: f64 = 1e-7;

/// Probe the three validity properties on seeded random points in
/// `[-10, 10]^N`. Failures are report content, not errors.
pub fn check_validity(cf: &CostFunction, samples: usize, seed: u64) -> Result<ValidityReport> {
    if samples < 1 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let n = cf.n;
    let h = TOL.finitediff_h;
    let mut rng = SplitMix64::new(seed);

    let mut diff_worst = 0.0f64;
    let mut diff_checked = 0usize;
    let mut boundary_points = 0usize;
    let mut mono_worst = 0.0f64;
    let mut mono_checked = 0usize;
    let mut trans_worst = 0.0f64;
    let mut trans_checked = 0usize;

    for _ in 0..samples {
        let q = QuantityVector::new(rng.vec_range(n, -10.0, 10.0))?;
        let prices = cf.price_values(&q)?;
        let base = cf.cost(&q)?;

        for j in 0..n {
            let mut up = q.to_vec();
            up[j] += h;
            let mut down = q.to_vec();
            down[j] -= h;
            let fd = (cf.cost(&QuantityVector::new(up)?)?
                - cf.cost(&QuantityVector::new(down)?)?)
                / (2.0 * h);
            let gap = (fd - prices[j]).abs();
            diff_checked += 1;
            if gap > DIFF_TOL {
                if price_support_changes(cf, &q, j, 2.0 * h)? {
                    boundary_points += 1;
                } else {
                    diff_worst = diff_worst.max(gap);
                }
            } else {
                diff_worst = diff_worst.max(gap);
            }
        }

        let bump = QuantityVector::new(rng.vec_range(n, 0.0, 1.0))?;
        let bumped = cf.cost(&q.add(&bump))?;
        mono_checked += 1;
        if bumped < base {
            mono_worst = mono_worst.max(base - bumped);
        }

        for k in [-3.0, 0.5, 7.0] {
            let shifted = cf.cost(&q.shift(k))?;
            trans_checked += 1;
            trans_worst = trans_worst.max((shifted - base - k).abs());
        }
    }

    Ok(ValidityReport {
        differentiability: PropertyCheck {
            passed: diff_worst <= DIFF_TOL,
            worst_violation: diff_worst,
            checked: diff_checked,
        },
        monotonicity: PropertyCheck {
            passed: mono_worst <= MONO_TOL,
            worst_violation: mono_worst,
            checked: mono_checked,
        },
        translation_invariance: PropertyCheck {
            passed: trans_worst <= TRANSLATION_TOL,
            worst_violation: trans_worst,
            checked: trans_checked,
        },
        boundary_points,
    })
}

/// True when the set of (essentially) zero prices differs across the
/// finite-difference stencil around coordinate j.
fn price_support_changes(cf: &CostFunction, q: &QuantityVector, j: usize, h: f64) -> Result<bool> {
    let support = |p: &[f64]| -> Vec<bool> { p.iter().map(|&x| x > 1e-12).collect() };
    let mut lo = q.to_vec();
    lo[j] -= h;
    let mut hi = q.to_vec();
    hi[j] += h;
    let s_lo = support(&cf.price_values(&QuantityVector::new(lo)?)?);
    let s_hi = support(&cf.price_values(&QuantityVector::new(hi)?)?);
    Ok(s_lo != s_hi)
}

/// Sampled estimate of the price-sensitivity sum `max_q sum_ij |dp_i/dq_j|`
/// by central finite differences at `q = 0` and `samples` seeded random
/// points in `[-10, 10]^N`. Where the one-sided differences disagree by more
/// than 1e-3 (a kink of piecewise-linear prices) the larger one-sided
/// magnitude is used.
///
/// This is a sampled lower estimate of the true supremum; analytic
/// `phi_bound` values stay authoritative for bound checks.
pub fn estimate_phi(cf: &CostFunction, samples: usize, seed: u64) -> Result<f64> {
    if samples < 1 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let n = cf.n;
    let h = TOL.finitediff_h;
    let mut rng = SplitMix64::new(seed);
    let mut best = 0.0f64;

    for sample in 0..=samples {
        let q = if sample == 0 {
            QuantityVector::zeros(n)
        } else {
            QuantityVector::new(rng.vec_range(n, -10.0, 10.0))?
        };
        let at_q = cf.price_values(&q)?;
        let mut total = 0.0;
        for j in 0..n {
            let mut up = q.to_vec();
            up[j] += h;
            let mut down = q.to_vec();
            down[j] -= h;
            let p_up = cf.price_values(&QuantityVector::new(up)?)?;
            let p_down = cf.price_values(&QuantityVector::new(down)?)?;
            for i in 0..n {
                let fwd = (p_up[i] - at_q[i]) / h;
                let bwd = (at_q[i] - p_down[i]) / h;
                total += if (fwd - bwd).abs() > 1e-3 {
                    fwd.abs().max(bwd.abs())
                } else {
                    ((p_up[i] - p_down[i]) / (2.0 * h)).abs()
                };
            }
        }
        best = best.max(total);
    }
    Ok(best)
}

/// Outcome of checking `|C(q + r) - C(q) - p(q) . r| <= eps^2 phi / 2` on
/// sampled trades with per-coordinate size at most eps.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bound: f64,
    pub phi: f64,
    pub max_abs_gap: f64,
    pub worst_signed_gap: f64,
    pub violations: usize,
    pub trials: usize,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Check the small-trade pricing inequality on `trials` seeded random
/// `(q, r)` pairs with `|r_i| <= eps`, using the stored `phi_bound` or a
/// sampled estimate when absent.
pub fn verify_pricing_diff_bound(
    cf: &CostFunction,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be > 0")));
    }
    let phi = match cf.phi_bound {
        Some(phi) => phi,
        None => estimate_phi(cf, 200, seed ^ 0x9E37_79B9)?,
    };
    let bound = eps * eps * phi / 2.0;
    let n = cf.n;
    let mut rng = SplitMix64::new(seed);

    let mut max_abs_gap = 0.0f64;
    let mut worst_signed_gap = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..trials {
        let q = QuantityVector::new(rng.vec_range(n, -10.0, 10.0))?;
        let r = QuantityVector::new(rng.vec_range(n, -eps, eps))?;
        let linear: f64 = cf
            .price_values(&q)?
            .iter()
            .zip(r.as_slice())
            .map(|(p, ri)| p * ri)
            .sum();
        let gap = cf.cost(&q.add(&r))? - cf.cost(&q)? - linear;
        if gap.abs() > max_abs_gap {
            max_abs_gap = gap.abs();
            worst_signed_gap = gap;
        }
        if gap.abs() > bound + 1e-12 {
            violations += 1;
        }
    }
    Ok(BoundReport {
        bound,
        phi,
        max_abs_gap,
        worst_signed_gap,
        violations,
        trials,
    })
}

/// Receipt for one executed trade.
#[derive(Debug, Clone)]
pub struct TradeReceipt {
    pub shares: QuantityVector,
    pub payment: f64,
    pub prices_before: ProbVector,
    pub prices_after: ProbVector,
}

/// A market session: the cost function, the outstanding quantities, and the
/// money collected so far. Transitions are pure; `trade` returns the
/// successor state.
#[derive(Debug, Clone)]
pub struct MarketState {
    cost_fn: CostFunction,
    q: QuantityVector,
    collected: f64,
    initial_cost: f64,
}

impl MarketState {
    /// Fresh market at `q = 0`.
    pub fn new(cost_fn: CostFunction) -> Result<Self> {
        let q = QuantityVector::zeros(cost_fn.outcomes());
        let initial_cost = cost_fn.cost(&q)?;
        Ok(Self {
            cost_fn,
            q,
            collected: 0.0,
            initial_cost,
        })
    }

    pub fn cost_fn(&self) -> &CostFunction {
        &self.cost_fn
    }

    pub fn quantities(&self) -> &QuantityVector {
        &self.q
    }

    pub fn collected(&self) -> f64 {
        self.collected
    }

    pub fn initial_cost(&self) -> f64 {
        self.initial_cost
    }

    pub fn prices(&self) -> Result<ProbVector> {
        self.cost_fn.prices(&self.q)
    }

    /// Execute a bundle purchase (entries may be negative). The payment is
    /// exactly `C(q + r) - C(q)`.
    pub fn trade(&self, r: &QuantityVector) -> Result<(MarketState, TradeReceipt)> {
        self.cost_fn.check_len(r)?;
        let before = self.cost_fn.prices(&self.q)?;
        let q_next = self.q.add(r);
        let payment = self.cost_fn.cost(&q_next)? - self.cost_fn.cost(&self.q)?;
        let after = self.cost_fn.prices(&q_next)?;
        let next = MarketState {
            cost_fn: self.cost_fn.clone(),
            q: q_next,
            collected: self.collected + payment,
            initial_cost: self.initial_cost,
        };
        let receipt = TradeReceipt {
            shares: r.clone(),
            payment,
            prices_before: before,
            prices_after: after,
        };
        Ok((next, receipt))
    }

    /// Maker's realized loss if `outcome` happens: payout owed on the
    /// outstanding shares minus the money taken in.
    pub fn realized_maker_loss(&self, outcome: usize) -> Result<f64> {
        if outcome >= self.cost_fn.outcomes() {
            return Err(Error::InvalidOutcome {
                index: outcome,
                n: self.cost_fn.outcomes(),
            });
        }
        Ok(self.q[outcome] - self.collected)
    }

    /// Fill a limit order: buy up to `max_shares` of `outcome` but never
    /// push its price above `limit_price`. The marginal fill is found by
    /// bisection on the monotone own-price curve (share tolerance 1e-10).
    pub fn accept_limit_order(
        &self,
        outcome: usize,
        max_shares: f64,
        limit_price: f64,
    ) -> Result<(MarketState, TradeReceipt)> {
        let n = self.cost_fn.outcomes();
        if outcome >= n {
            return Err(Error::InvalidOutcome { index: outcome, n });
        }
        if !(max_shares > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max_shares = {max_shares} must be > 0"
            )));
        }
        if !(limit_price > 0.0 && limit_price < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "limit_price = {limit_price} must lie in (0, 1)"
            )));
        }

        let price_at = |s: f64| -> Result<f64> {
            let moved = self.q.add(&QuantityVector::single(n, outcome, s));
            Ok(self.cost_fn.prices(&moved)?[outcome])
        };

        let fill = if price_at(0.0)? >= limit_price {
            0.0
        } else {
            // Bracket: start from the closed-form inverse for the log market
            // (plus slack), otherwise from the state scale, and double until
            // the upper end crosses the limit or the requested cap binds.
            let mut hi = match &self.cost_fn.pricing {
                Pricing::Lmsr { b } => {
                    let odds = limit_price / (1.0 - limit_price) * (n as f64 - 1.0);
                    (b * odds.ln()).max(0.0) + self.q.max_abs() + 1.0
                }
                _ => self.q.max_abs() + 1.0,
            };
            let mut capped = false;
            for _ in 0..200 {
                if hi >= max_shares {
                    hi = max_shares;
                    capped = true;
                    break;
                }
                if price_at(hi)? >= limit_price {
                    break;
                }
                hi *= 2.0;
            }
            if capped && price_at(max_shares)? < limit_price {
                max_shares
            } else {
                let mut lo = 0.0f64;
                let mut hi = hi.min(max_shares);
                while hi - lo > 1e-10 {
                    let mid = 0.5 * (lo + hi);
                    if price_at(mid)? < limit_price {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (0.5 * (lo + hi)).min(max_shares)
            }
        };

        self.trade(&QuantityVector::single(n, outcome, fill))
    }
}
