//! Learning from expert advice.
//!
//! Weights at round t depend only on the cumulative losses through round
//! t-1. A follow-the-regularized-leader learner picks
//! `argmin_w (w . L + R(w)/eta)`; a market reduction reads its weights off a
//! cost-function market's prices at `-eps * L`. For any convex market the
//! two coincide, which is what ties the maker's bounded loss to an
//! O(sqrt(T)) regret bound.

use crate::cost_market::CostFunction;
use crate::error::{Error, Result};
use crate::penalty::{maximize, PenaltyFunction};
use crate::types::{LossMatrix, ProbVector, QuantityVector};

/// Which learner to run.
#[derive(Debug, Clone)]
pub enum LearnerConfig {
    /// Follow the regularized leader with the given regularizer and rate.
    Ftrl {
        regularizer: PenaltyFunction,
        eta: f64,
    },
    /// Weights are the market's prices at minus epsilon times the losses.
    MarketReduction { cost_fn: CostFunction, epsilon: f64 },
    /// Follow the leader: uniform over the current argmin-loss experts.
    FollowTheLeader,
}

/// FTRL weights: the minimizer of `w . L + R(w)/eta` over the simplex,
/// computed by maximizing `p . (-L) - R(p)/eta`.
pub fn ftrl_weights(
    regularizer: &PenaltyFunction,
    eta: f64,
    cumulative_losses: &[f64],
) -> Result<ProbVector> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must be > 0")));
    }
    let scaled = regularizer.scaled(1.0 / eta)?;
    let negated = QuantityVector::new(cumulative_losses.iter().map(|&x| -x).collect())?;
    Ok(maximize(&scaled, &negated)?.prices)
}

/// Reduction weights: the market's prices at `-epsilon * L`.
pub fn market_reduction_weights(
    cost_fn: &CostFunction,
    epsilon: f64,
    cumulative_losses: &[f64],
) -> Result<ProbVector> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} must be > 0"
        )));
    }
    let q = QuantityVector::new(cumulative_losses.iter().map(|&x| -epsilon * x).collect())?;
    cost_fn.prices(&q)
}

/// The rate that balances maker loss B against price stability phi over a
/// known horizon: `sqrt(2 B / (phi T))`.
pub fn tune_epsilon(loss_bound: f64, phi: f64, t: usize) -> Result<f64> {
    if !(loss_bound > 0.0) || !(phi > 0.0) || t < 1 {
        return Err(Error::InvalidParameter(format!(
            "need loss_bound > 0, phi > 0, t >= 1; got ({loss_bound}, {phi}, {t})"
        )));
    }
    Ok((2.0 * loss_bound / (phi * t as f64)).sqrt())
}

/// Regret guarantee of the tuned reduction: `sqrt(2 B phi T)`.
pub fn reduction_regret_bound(loss_bound: f64, phi: f64, t: usize) -> f64 {
    debug_assert!(loss_bound > 0.0 && phi > 0.0 && t >= 1);
    (2.0 * loss_bound * phi * t as f64).sqrt()
}

/// Regret guarantee of eta-optimized FTRL with curvature constant lambda
/// and regularizer range: `2 sqrt(2 lambda range T)`.
///
/// lambda is caller-supplied; the crate does not estimate inverse-Hessian
/// curvature numerically.
pub fn ftrl_bound(lambda: f64, reg_range: f64, t: usize) -> Result<f64> {
    if !(lambda > 0.0) || !(reg_range > 0.0) || t < 1 {
        return Err(Error::InvalidParameter(format!(
            "need lambda > 0, range > 0, t >= 1; got ({lambda}, {reg_range}, {t})"
        )));
    }
    Ok(2.0 * (2.0 * lambda * reg_range * t as f64).sqrt())
}

/// Learner snapshot after `round` rounds: cumulative losses so far and the
/// weights the learner will play next round.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub algo: LearnerConfig,
    pub cumulative_losses: Vec<f64>,
    pub round: usize,
    pub weights: ProbVector,
}

impl LearnerState {
    pub fn new(algo: LearnerConfig, n_experts: usize) -> Result<Self> {
        let zeros = vec![0.0; n_experts];
        let weights = compute_weights(&algo, &zeros)?;
        Ok(Self {
            algo,
            cumulative_losses: zeros,
            round: 0,
            weights,
        })
    }

    /// Consume one round of losses; returns the successor state and the
    /// learner's instantaneous loss `w_t . l_t`.
    pub fn step(&self, round_losses: &[f64]) -> Result<(LearnerState, f64)> {
        if round_losses.len() != self.cumulative_losses.len() {
            return Err(Error::InvalidInput(format!(
                "loss row has {} entries, learner tracks {}",
                round_losses.len(),
                self.cumulative_losses.len()
            )));
        }
        if round_losses.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidInput("losses must lie in [0, 1]".into()));
        }
        let alg_loss: f64 = self
            .weights
            .as_slice()
            .iter()
            .zip(round_losses)
            .map(|(w, l)| w * l)
            .sum();
        let cumulative: Vec<f64> = self
            .cumulative_losses
            .iter()
            .zip(round_losses)
            .map(|(a, b)| a + b)
            .collect();
        let weights = compute_weights(&self.algo, &cumulative)?;
        Ok((
            LearnerState {
                algo: self.algo.clone(),
                cumulative_losses: cumulative,
                round: self.round + 1,
                weights,
            },
            alg_loss,
        ))
    }
}

fn compute_weights(algo: &LearnerConfig, cumulative_losses: &[f64]) -> Result<ProbVector> {
    match algo {
        LearnerConfig::Ftrl { regularizer, eta } => {
            ftrl_weights(regularizer, *eta, cumulative_losses)
        }
        LearnerConfig::MarketReduction { cost_fn, epsilon } => {
            market_reduction_weights(cost_fn, *epsilon, cumulative_losses)
        }
        LearnerConfig::FollowTheLeader => {
            let min = cumulative_losses
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let mut w: Vec<f64> = cumulative_losses
                .iter()
                .map(|&l| if l == min { 1.0 } else { 0.0 })
                .collect();
            let count: f64 = w.iter().sum();
            for x in &mut w {
                *x /= count;
            }
            ProbVector::new(w)
        }
    }
}

/// One round of a learner run.
#[derive(Debug, Clone)]
pub struct TraceRow {
    /// 1-based round index.
    pub round: usize,
    /// Weights played this round (a function of losses before it).
    pub weights: Vec<f64>,
    /// Per-expert losses revealed this round.
    pub losses: Vec<f64>,
    /// Learner's instantaneous loss.
    pub alg_loss: f64,
    pub cumulative_alg_loss: f64,
    /// Best expert's cumulative loss through this round.
    pub best_expert_loss: f64,
    /// Cumulative regret through this round.
    pub regret: f64,
}

/// Full per-round record of a learner run.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    rows: Vec<TraceRow>,
    final_regret: f64,
}

impl RegretTrace {
    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn final_regret(&self) -> f64 {
        self.final_regret
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    /// Recompute the final regret from the raw per-round records.
    pub fn recompute_final_regret(&self) -> f64 {
        let n = self.rows.first().map_or(0, |r| r.losses.len());
        let mut alg = 0.0;
        let mut per_expert = vec![0.0; n];
        for row in &self.rows {
            alg += row.alg_loss;
            for (acc, l) in per_expert.iter_mut().zip(row.losses.iter()) {
                *acc += l;
            }
        }
        alg - per_expert.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Run a learner over a loss matrix, recording weights, losses, and regret
/// every round.
pub fn run_learner(algo: LearnerConfig, losses: &LossMatrix) -> Result<RegretTrace> {
    let mut state = LearnerState::new(algo, losses.experts())?;
    let mut rows = Vec::with_capacity(losses.rounds());
    let mut cumulative_alg = 0.0;
    for t in 0..losses.rounds() {
        let row = losses.row(t);
        let weights = state.weights.to_vec();
        let (next, alg_loss) = state.step(row)?;
        cumulative_alg += alg_loss;
        let best = next
            .cumulative_losses
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        rows.push(TraceRow {
            round: t + 1,
            weights,
            losses: row.to_vec(),
            alg_loss,
            cumulative_alg_loss: cumulative_alg,
            best_expert_loss: best,
            regret: cumulative_alg - best,
        });
        state = next;
    }
    let final_regret = rows.last().map_or(0.0, |r| r.regret);
    Ok(RegretTrace { rows, final_regret })
}

/// Period lengths 1, 2, 4, ... covering t rounds; the last period is
/// truncated to fit.
pub fn doubling_periods(t: usize) -> Vec<usize> {
    let mut periods = Vec::new();
    let mut remaining = t;
    let mut len = 1usize;
    while remaining > 0 {
        let take = len.min(remaining);
        periods.push(take);
        remaining -= take;
        len *= 2;
    }
    periods
}

/// Run a doubling-trick schedule when the horizon is not known in advance:
/// restart the learner on periods of exponentially increasing length, each
/// configured (tuned epsilon or eta) for its own nominal length. Regret in
/// the trace is accounted against the global best expert.
pub fn run_with_doubling(
    family: impl Fn(usize) -> Result<LearnerConfig>,
    losses: &LossMatrix,
) -> Result<RegretTrace> {
    let n = losses.experts();
    let mut rows: Vec<TraceRow> = Vec::with_capacity(losses.rounds());
    let mut cumulative_alg = 0.0;
    let mut per_expert = vec![0.0; n];
    let mut start = 0usize;
    let mut nominal = 1usize;

    while start < losses.rounds() {
        let take = nominal.min(losses.rounds() - start);
        let config = family(nominal)?;
        let slice = losses.slice_rounds(start, start + take);
        let period = run_learner(config, &slice)?;
        for row in period.rows() {
            cumulative_alg += row.alg_loss;
            for (acc, l) in per_expert.iter_mut().zip(row.losses.iter()) {
                *acc += l;
            }
            let best = per_expert.iter().cloned().fold(f64::INFINITY, f64::min);
            rows.push(TraceRow {
                round: start + row.round,
                weights: row.weights.clone(),
                losses: row.losses.clone(),
                alg_loss: row.alg_loss,
                cumulative_alg_loss: cumulative_alg,
                best_expert_loss: best,
                regret: cumulative_alg - best,
            });
        }
        start += take;
        nominal *= 2;
    }
    let final_regret = rows.last().map_or(0.0, |r| r.regret);
    Ok(RegretTrace { rows, final_regret })
}

/// The two terms of the FTRL regret bound computed from a trace:
/// the weight-drift term `sum_t l_t . (w_t - w_{t+1})` and the regularizer
/// range term `(R(u*) - R(w_0)) / eta`, where `u*` is the best expert in
/// hindsight (the regret comparator) and `w_0` minimizes R alone. Their sum
/// upper-bounds the realized regret.
///
/// The trace must come from an FTRL run with this regularizer and eta; every
/// round's weights are re-derived and compared before decomposing.
pub fn ftrl_regret_decomposition(
    trace: &RegretTrace,
    regularizer: &PenaltyFunction,
    eta: f64,
) -> Result<(f64, f64)> {
    if trace.rows.is_empty() {
        return Err(Error::InvalidTrace("empty trace".into()));
    }
    let n = trace.rows[0].losses.len();
    let mut cumulative = vec![0.0; n];
    for row in &trace.rows {
        let expected = ftrl_weights(regularizer, eta, &cumulative)?;
        let played = ProbVector::new(row.weights.clone())?;
        if expected.max_abs_diff(&played) > 1e-6 {
            return Err(Error::InvalidTrace(format!(
                "round {}: weights do not match FTRL recomputation",
                row.round
            )));
        }
        for (acc, l) in cumulative.iter_mut().zip(row.losses.iter()) {
            *acc += l;
        }
    }

    let mut drift = 0.0;
    for (t, row) in trace.rows.iter().enumerate() {
        let next_weights: Vec<f64> = if t + 1 < trace.rows.len() {
            trace.rows[t + 1].weights.clone()
        } else {
            ftrl_weights(regularizer, eta, &cumulative)?.to_vec()
        };
        drift += row
            .losses
            .iter()
            .zip(row.weights.iter().zip(next_weights.iter()))
            .map(|(l, (w, w_next))| l * (w - w_next))
            .sum::<f64>();
    }

    let w_first = ftrl_weights(regularizer, eta, &vec![0.0; n])?;
    let best_expert = cumulative
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .expect("nonempty losses");
    let comparator = ProbVector::vertex(n, best_expert);
    let range =
        (regularizer.value(comparator.as_slice()) - regularizer.value(w_first.as_slice())) / eta;
    Ok((drift, range))
}
