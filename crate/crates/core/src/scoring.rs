//! Proper scoring rules and market scoring rule (MSR) markets.
//!
//! An MSR keeps a standing probability report; a trader replaces it and is
//! paid the score difference on the realized outcome. Strictly proper rules
//! and convex cost-function markets convert into each other through
//! `alpha(p) = sum_i p_i s_i(p)` and
//! `s_i(p) = alpha(p) - p . grad alpha(p) + d alpha/d p_i`, and the two
//! market forms pay identical trade profits while all prices are positive.
//! [`verify_equivalence`] checks both directions numerically.

use crate::cost_market::CostFunction;
use crate::error::{Error, Result};
use crate::penalty::PenaltyFunction;
use crate::rng::SplitMix64;
use crate::types::{ProbVector, QuantityVector};

/// A regular strictly proper scoring rule.
///
/// `Logarithmic(b)` scores `b ln p_i` (infinite penalty for ruling out the
/// realized outcome), `Quadratic(b)` scores `b (2 p_i - sum_j p_j^2)`, and
/// `FromPenalty` evaluates the conversion formula against an arbitrary
/// strictly convex penalty's value and gradient.
#[derive(Debug, Clone)]
pub enum ScoringRule {
    Logarithmic { b: f64 },
    Quadratic { b: f64 },
    FromPenalty(PenaltyFunction),
}

/// Logarithmic scoring rule with the offset parameters fixed to zero.
pub fn make_log_rule(b: f64) -> Result<ScoringRule> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log rule b = {b} must be > 0"
        )));
    }
    Ok(ScoringRule::Logarithmic { b })
}

/// Quadratic scoring rule with the offset parameters fixed to zero.
pub fn make_quadratic_rule(b: f64) -> Result<ScoringRule> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadratic rule b = {b} must be > 0"
        )));
    }
    Ok(ScoringRule::Quadratic { b })
}

impl ScoringRule {
    /// Score of reporting `p` when outcome `i` occurs. Extended-real: the
    /// log rule returns negative infinity on a zero-probability outcome.
    pub fn score(&self, p: &ProbVector, i: usize) -> f64 {
        match self {
            Self::Logarithmic { b } => {
                if p[i] > 0.0 {
                    b * p[i].ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Quadratic { b } => {
                let sq: f64 = p.as_slice().iter().map(|&x| x * x).sum();
                b * (2.0 * p[i] - sq)
            }
            Self::FromPenalty(alpha) => {
                let slice = p.as_slice();
                let value = alpha.value(slice);
                let grad = alpha.gradient(slice);
                let weighted: f64 = slice.iter().zip(grad.iter()).map(|(x, g)| x * g).sum();
                value - weighted + grad[i]
            }
        }
    }

    /// All N outcome scores at one report.
    pub fn scores(&self, p: &ProbVector) -> Vec<f64> {
        (0..p.len()).map(|i| self.score(p, i)).collect()
    }

    /// Expected score of reporting `report` under `belief`.
    pub fn expected_score(&self, belief: &ProbVector, report: &ProbVector) -> f64 {
        belief
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if w == 0.0 {
                    0.0
                } else {
                    w * self.score(report, i)
                }
            })
            .sum()
    }

    /// Regularity and properness spot-check on seeded random interior
    /// reports: expected score finite, and truthful reporting never beaten
    /// by more than 1e-9.
    pub fn spot_check(&self, n: usize, seed: u64) -> Result<()> {
        let mut rng = SplitMix64::new(seed);
        for _ in 0..100 {
            let belief = ProbVector::new(rng.simplex_point(n, 1e-3))?;
            let truthful = self.expected_score(&belief, &belief);
            if !truthful.is_finite() {
                return Err(Error::InvalidPenalty(format!(
                    "expected score not finite at {belief:?}"
                )));
            }
            for _ in 0..100 {
                let other = ProbVector::new(rng.simplex_point(n, 1e-3))?;
                let alt = self.expected_score(&belief, &other);
                if alt.is_nan() || alt == f64::INFINITY {
                    return Err(Error::InvalidPenalty(format!(
                        "expected score of interior report not finite: {alt}"
                    )));
                }
                if !(truthful >= alt - 1e-9) {
                    return Err(Error::InvalidPenalty(format!(
                        "properness violated: truthful {truthful} < alternative {alt}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Penalty induced by a proper scoring rule: `alpha(p) = sum_i p_i s_i(p)`.
/// The two built-in rules map onto their tagged penalty kinds exactly.
pub fn penalty_from_rule(rule: &ScoringRule) -> PenaltyFunction {
    match rule {
        ScoringRule::Logarithmic { b } => PenaltyFunction::Entropic { b: *b },
        ScoringRule::Quadratic { b } => PenaltyFunction::Quadratic { b: *b },
        ScoringRule::FromPenalty(alpha) => alpha.clone(),
    }
}

/// Scoring rule induced by a strictly convex differentiable penalty via
/// `s_i(p) = alpha(p) - p . grad alpha(p) + d alpha/d p_i`.
pub fn rule_from_penalty(alpha: &PenaltyFunction) -> Result<ScoringRule> {
    let probe = ProbVector::uniform(2);
    if !alpha.value(probe.as_slice()).is_finite() {
        return Err(Error::InvalidPenalty(
            "penalty value not finite on the interior; no gradient available".into(),
        ));
    }
    Ok(ScoringRule::FromPenalty(alpha.clone()))
}

/// A market scoring rule session: the rule, the standing report, and the
/// report the maker opened with (which fixes the maker's worst-case loss).
#[derive(Debug, Clone)]
pub struct MsrState {
    rule: ScoringRule,
    current: ProbVector,
    initial: ProbVector,
}

impl MsrState {
    /// Open a market at `initial`. Reports the rule scores as infinite
    /// (zero-probability outcomes under the log rule) are inadmissible.
    pub fn new(rule: ScoringRule, initial: ProbVector) -> Result<Self> {
        check_admissible(&rule, &initial)?;
        Ok(Self {
            rule,
            current: initial.clone(),
            initial,
        })
    }

    pub fn rule(&self) -> &ScoringRule {
        &self.rule
    }

    pub fn current(&self) -> &ProbVector {
        &self.current
    }

    pub fn initial(&self) -> &ProbVector {
        &self.initial
    }

    /// Move the standing report. The trader's payoff vector holds, per
    /// outcome i, `s_i(report) - s_i(previous)`.
    pub fn trade(&self, report: &ProbVector) -> Result<(MsrState, Vec<f64>)> {
        if report.len() != self.current.len() {
            return Err(Error::InvalidInput(format!(
                "report has {} entries, market has {}",
                report.len(),
                self.current.len()
            )));
        }
        check_admissible(&self.rule, report)?;
        let payoff: Vec<f64> = (0..report.len())
            .map(|i| self.rule.score(report, i) - self.rule.score(&self.current, i))
            .collect();
        let next = MsrState {
            rule: self.rule.clone(),
            current: report.clone(),
            initial: self.initial.clone(),
        };
        Ok((next, payoff))
    }
}

fn check_admissible(rule: &ScoringRule, report: &ProbVector) -> Result<()> {
    for i in 0..report.len() {
        if rule.score(report, i) == f64::NEG_INFINITY {
            return Err(Error::InadmissibleReport(format!(
                "outcome {i} has probability 0 and infinite score exposure"
            )));
        }
    }
    Ok(())
}

/// Maker's worst-case loss `max_i max_p (s_i(p) - s_i(initial))`.
///
/// Logarithmic rules evaluate in closed form (`-b ln min_i p0_i`; `b ln N`
/// from the uniform start). Other rules search vertices, a simplex grid,
/// and near-vertex blends; for the quadratic rule the vertices attain the
/// maximum, so the grid is a certificate rather than the answer. Returns
/// infinity when the initial report is inadmissible for the rule.
pub fn msr_worst_case_loss(rule: &ScoringRule, initial: &ProbVector) -> f64 {
    match rule {
        ScoringRule::Logarithmic { b } => {
            let min = initial.min_entry();
            if min > 0.0 {
                -b * min.ln()
            } else {
                f64::INFINITY
            }
        }
        _ => {
            let n = initial.len();
            let s0 = rule.scores(initial);
            let mut worst = f64::NEG_INFINITY;
            let mut consider = |p: &ProbVector| {
                for (i, base) in s0.iter().enumerate() {
                    let gap = rule.score(p, i) - base;
                    if gap.is_finite() && gap > worst {
                        worst = gap;
                    }
                }
            };
            for i in 0..n {
                consider(&ProbVector::vertex(n, i));
                for delta in [1e-3, 1e-2, 0.1] {
                    let mut blend = vec![delta / n as f64; n];
                    blend[i] += 1.0 - delta;
                    consider(&ProbVector::new(blend).expect("valid blend"));
                }
            }
            let steps = match n {
                2 | 3 => 1000,
                4 => 50,
                _ => 20,
            };
            simplex_grid(n, steps, &mut |p| {
                consider(&ProbVector::new(p.to_vec()).expect("grid point on simplex"));
            });
            worst
        }
    }
}

/// Visit every point of the resolution-1/steps grid on the N-simplex.
pub fn simplex_grid(n: usize, steps: usize, visit: &mut impl FnMut(&[f64])) {
    let mut point = vec![0.0; n];
    fill_grid(n, steps, steps, 0, &mut point, visit);
}

fn fill_grid(
    n: usize,
    steps: usize,
    remaining: usize,
    coord: usize,
    point: &mut Vec<f64>,
    visit: &mut impl FnMut(&[f64]),
) {
    if coord == n - 1 {
        point[coord] = remaining as f64 / steps as f64;
        visit(point);
        return;
    }
    for k in 0..=remaining {
        point[coord] = k as f64 / steps as f64;
        fill_grid(n, steps, remaining - k, coord + 1, point, visit);
    }
}

/// Result of the trade-profit and price-reachability comparison between an
/// MSR and its matching cost-function market.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub max_profit_gap: f64,
    pub max_reachability_gap: f64,
    pub trials: usize,
    pub reachability_trials: usize,
}

impl EquivalenceReport {
    /// Profit equality within 1e-8 and reachability within 1e-6, the
    /// tolerances at which the equivalence is asserted.
    pub fn passed(&self) -> bool {
        self.max_profit_gap <= 1e-8 && self.max_reachability_gap <= 1e-6
    }
}

/// Compare trade profits between `rule` and `cf` on `trials` random interior
/// trades (all prices above 0.01 before and after), and check that setting
/// `q_i = s_i(r)` drives the market prices to `r` for 100 random interior
/// targets.
///
/// The two markets must be linked by the conversion formulas, i.e. `cf`'s
/// penalty is the one induced by `rule`.
pub fn verify_equivalence(
    rule: &ScoringRule,
    cf: &CostFunction,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let n = cf.outcomes();
    let mut rng = SplitMix64::new(seed);
    let mut max_profit_gap = 0.0f64;

    for _ in 0..trials {
        let (q, p_before) = interior_quantity(rule, cf, n, &mut rng)?;
        let (q_next, p_after) = interior_quantity(rule, cf, n, &mut rng)?;

        let cost_before = cf.cost(&q)?;
        let cost_after = cf.cost(&q_next)?;
        let s_before = rule.scores(&p_before);
        let s_after = rule.scores(&p_after);
        for i in 0..n {
            let cost_profit = (q_next[i] - q[i]) - (cost_after - cost_before);
            let msr_profit = s_after[i] - s_before[i];
            max_profit_gap = max_profit_gap.max((cost_profit - msr_profit).abs());
        }
    }

    let reachability_trials = 100;
    let mut max_reachability_gap = 0.0f64;
    for _ in 0..reachability_trials {
        let target = ProbVector::new(rng.simplex_point(n, 0.02))?;
        let q = QuantityVector::new(rule.scores(&target))?;
        let reached = cf.prices(&q)?;
        max_reachability_gap = max_reachability_gap.max(reached.max_abs_diff(&target));
    }

    Ok(EquivalenceReport {
        max_profit_gap,
        max_reachability_gap,
        trials,
        reachability_trials,
    })
}

/// Sample a quantity vector whose realized prices are comfortably interior:
/// scores of a random interior report, plus a random translation along the
/// all-ones direction (which leaves prices unchanged). Resamples until every
/// realized price clears 0.01.
fn interior_quantity(
    rule: &ScoringRule,
    cf: &CostFunction,
    n: usize,
    rng: &mut SplitMix64,
) -> Result<(QuantityVector, ProbVector)> {
    for _ in 0..100 {
        let target = ProbVector::new(rng.simplex_point(n, 0.02))?;
        let shift = rng.range(-3.0, 3.0);
        let q = QuantityVector::new(rule.scores(&target))?.shift(shift);
        let p = cf.prices(&q)?;
        if p.min_entry() > 0.01 {
            return Ok((q, p));
        }
    }
    Err(Error::InvalidInput(
        "could not sample an interior quantity vector".into(),
    ))
}
