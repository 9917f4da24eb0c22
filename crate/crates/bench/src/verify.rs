//! Bound-verification suite.
//!
//! Every check compares an observed quantity against a bound whose two sides
//! are both recorded; nothing reports pass without its numbers. The checks
//! cover: the tuned reduction's regret bounds for the log and quadratic
//! markets, follow-the-leader's linear regret, worst-case maker loss,
//! price-sensitivity (phi) estimates, the small-trade pricing inequality,
//! MSR/cost-market payoff equivalence, penalty/rule conversion round trips,
//! the reduction/FTRL weight identity, cost-function validity, and the
//! supremum solver's grid and closed-form oracles.

use marketlearn::learning::{
    ftrl_weights, market_reduction_weights, reduction_regret_bound, run_learner, tune_epsilon,
    LearnerConfig,
};
use marketlearn::penalty::{maximize, quad_price_closed_form, PenaltyFunction};
use marketlearn::scoring::{
    make_log_rule, make_quadratic_rule, penalty_from_rule, rule_from_penalty, simplex_grid,
    verify_equivalence,
};
use marketlearn::{
    check_validity, estimate_phi, make_lmsr, make_quad, verify_pricing_diff_bound, CostFunction,
    LossMatrix, MarketState, ProbVector, QuantityVector, SplitMix64,
};

use crate::error::Result;
use crate::gen::{rotating_losses, GeneratorKind, LossGenerator};

/// How a check's observed value must relate to its bound to pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// observed <= bound
    AtMost,
    /// observed >= bound
    AtLeast,
}

/// One verified inequality with both sides recorded.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl CheckLine {
    fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            relation: Relation::AtMost,
            pass: observed <= bound,
        }
    }

    fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound,
            relation: Relation::AtLeast,
            pass: observed >= bound,
        }
    }

    pub fn render(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        format!(
            "{} observed={:.9e} {} bound={:.9e} {}",
            self.name,
            self.observed,
            rel,
            self.bound,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// All check lines from one verification run.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<CheckLine>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&check.render());
            out.push('\n');
        }
        out.push_str(&format!(
            "{}/{} checks passed\n",
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        ));
        out
    }
}

fn reduction(cf: CostFunction, t: usize) -> Result<LearnerConfig> {
    let eps = tune_epsilon(cf.loss_bound.unwrap(), cf.phi_bound.unwrap(), t)?;
    Ok(LearnerConfig::MarketReduction {
        cost_fn: cf,
        epsilon: eps,
    })
}

/// The four loss families used by the regret-bound criteria: a rotating
/// deterministic adversary (the n-expert analog of the alternating stream),
/// Bernoulli and uniform noise, and the greedy adaptive adversary aimed at
/// the learner under test.
fn criterion_losses(
    family: usize,
    n: usize,
    t: usize,
    seed: u64,
    learner: &LearnerConfig,
) -> Result<LossMatrix> {
    match family {
        0 => rotating_losses(n, t, seed),
        1 => LossGenerator {
            kind: GeneratorKind::BernoulliIid {
                p: (0..n).map(|i| (i + 1) as f64 / (n + 1) as f64).collect(),
            },
            seed,
            n,
            t,
        }
        .generate(),
        2 => LossGenerator {
            kind: GeneratorKind::UniformRandom,
            seed,
            n,
            t,
        }
        .generate(),
        _ => LossGenerator {
            kind: GeneratorKind::GreedyAdaptive {
                target: Box::new(learner.clone()),
            },
            seed,
            n,
            t,
        }
        .generate(),
    }
}

const FAMILY_NAMES: [&str; 4] = ["alternating", "bernoulli", "uniform", "adaptive"];

fn max_regret_over_families(
    build: impl Fn() -> Result<LearnerConfig>,
    n: usize,
    t: usize,
    base_seed: u64,
) -> Result<Vec<(String, f64)>> {
    let mut results = Vec::new();
    for (family, name) in FAMILY_NAMES.iter().enumerate() {
        let mut worst = f64::NEG_INFINITY;
        for seed_offset in 0..5u64 {
            let learner = build()?;
            let losses = criterion_losses(family, n, t, base_seed + 31 * seed_offset, &learner)?;
            let trace = run_learner(learner, &losses)?;
            worst = worst.max(trace.final_regret());
        }
        results.push((name.to_string(), worst));
    }
    Ok(results)
}

/// Criterion 1: the tuned log-market reduction (weighted-majority weights)
/// keeps regret under `2 sqrt(T ln N)` for N = 10, T = 10^4 across all four
/// loss families, five seeds each.
pub fn criterion_wm_regret(seed: u64) -> Result<Vec<CheckLine>> {
    let (n, t) = (10usize, 10_000usize);
    let bound = 2.0 * (t as f64 * (n as f64).ln()).sqrt() + 1e-6;
    let build = || reduction(make_lmsr(1.0, n)?, t);
    // The tuned epsilon is exactly b sqrt(ln N / T).
    let eps = tune_epsilon((n as f64).ln(), 2.0, t)?;
    debug_assert!((eps - ((n as f64).ln() / t as f64).sqrt()).abs() < 1e-12);
    Ok(max_regret_over_families(build, n, t, seed)?
        .into_iter()
        .map(|(name, regret)| CheckLine::at_most(format!("wm_regret_{name}"), regret, bound))
        .collect())
}

/// Criterion 2: the tuned quadratic-market reduction (online gradient
/// descent) keeps regret under `N sqrt(T)` for N = 5, T = 10^4.
pub fn criterion_ogd_regret(seed: u64) -> Result<Vec<CheckLine>> {
    let (n, t) = (5usize, 10_000usize);
    let bound = n as f64 * (t as f64).sqrt() + 1e-6;
    let cf = make_quad(1.0, n)?;
    // The tuned bound is itself below N sqrt(T).
    let tuned = reduction_regret_bound(cf.loss_bound.unwrap(), cf.phi_bound.unwrap(), t);
    let mut lines = vec![CheckLine::at_most(
        "ogd_tuned_bound_below_nsqrt",
        tuned,
        bound,
    )];
    let build = || reduction(make_quad(1.0, n)?, t);
    lines.extend(
        max_regret_over_families(build, n, t, seed)?
            .into_iter()
            .map(|(name, regret)| CheckLine::at_most(format!("ogd_regret_{name}"), regret, bound)),
    );
    Ok(lines)
}

/// Criterion 3: follow-the-leader loses linearly on the alternating stream
/// while the tuned reduction stays inside its sqrt bound.
pub fn criterion_ftl_linear(_seed: u64) -> Result<Vec<CheckLine>> {
    let t = 1000usize;
    let losses = LossGenerator {
        kind: GeneratorKind::AlternatingAdversary,
        seed: 0,
        n: 2,
        t,
    }
    .generate()?;

    let ftl = run_learner(LearnerConfig::FollowTheLeader, &losses)?;
    let wm = run_learner(reduction(make_lmsr(1.0, 2)?, t)?, &losses)?;
    let wm_bound = 2.0 * (t as f64 * 2.0f64.ln()).sqrt();
    Ok(vec![
        CheckLine::at_least("ftl_alternating_regret", ftl.final_regret(), 450.0),
        CheckLine::at_most("wm_alternating_regret", wm.final_regret(), wm_bound + 1e-6),
    ])
}

/// Criterion 4: across 100 seeded 200-trade sessions, realized maker loss
/// never exceeds `b ln N` (log market) or `b (N-1)/N` (quadratic market).
pub fn criterion_maker_loss(seed: u64) -> Result<Vec<CheckLine>> {
    let n = 4usize;
    let mut lines = Vec::new();
    for (name, cf) in [("lmsr", make_lmsr(1.0, n)?), ("quad", make_quad(1.0, n)?)] {
        let bound = cf.loss_bound.unwrap();
        let mut worst = f64::NEG_INFINITY;
        let mut rng = SplitMix64::new(seed ^ 0xABCD);
        for _ in 0..100 {
            let mut state = MarketState::new(cf.clone())?;
            for _ in 0..200 {
                let r = QuantityVector::new(rng.vec_range(n, -2.0, 2.0))?;
                state = state.trade(&r)?.0;
            }
            for outcome in 0..n {
                worst = worst.max(state.realized_maker_loss(outcome)?);
            }
        }
        lines.push(CheckLine::at_most(
            format!("{name}_maker_loss"),
            worst,
            bound + 1e-6,
        ));
    }
    Ok(lines)
}

/// Criterion 5: sampled price-sensitivity sums stay under `2/b` (log) and
/// `(N^2-1)/(2b)` (quadratic) for b in {0.5, 1, 5} and N in {2, 3, 10}.
pub fn criterion_phi_stability(seed: u64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for b in [0.5, 1.0, 5.0] {
        for n in [2usize, 3, 10] {
            let lmsr = make_lmsr(b, n)?;
            let observed = estimate_phi(&lmsr, 10_000, seed)?;
            lines.push(CheckLine::at_most(
                format!("lmsr_phi_estimate_b{b}_n{n}"),
                observed,
                2.0 / b + 1e-3,
            ));
            let quad = make_quad(b, n)?;
            let observed = estimate_phi(&quad, 10_000, seed)?;
            lines.push(CheckLine::at_most(
                format!("quad_phi_estimate_b{b}_n{n}"),
                observed,
                (n as f64 * n as f64 - 1.0) / (2.0 * b) + 1e-3,
            ));
        }
    }
    Ok(lines)
}

/// Criterion 6: the small-trade pricing inequality holds with zero
/// violations over 10^4 sampled (q, r) pairs for eps in {0.01, 0.1, 1}.
pub fn criterion_pricing_diff(seed: u64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for (name, cf) in [("lmsr", make_lmsr(1.0, 4)?), ("quad", make_quad(1.0, 4)?)] {
        for eps in [0.01, 0.1, 1.0] {
            let report = verify_pricing_diff_bound(&cf, eps, 10_000, seed)?;
            lines.push(CheckLine::at_most(
                format!("{name}_pricing_diff_eps{eps}"),
                report.max_abs_gap,
                report.bound,
            ));
        }
    }
    Ok(lines)
}

/// Criterion 7: MSR and cost-market trade profits agree to 1e-8 on interior
/// trades, and score-vector quantities reproduce target prices to 1e-6.
pub fn criterion_equivalence(seed: u64) -> Result<Vec<CheckLine>> {
    let n = 4usize;
    let mut lines = Vec::new();
    for (name, rule, cf) in [
        ("log_lmsr", make_log_rule(1.0)?, make_lmsr(1.0, n)?),
        ("quad_quad", make_quadratic_rule(1.0)?, make_quad(1.0, n)?),
    ] {
        let report = verify_equivalence(&rule, &cf, 500, seed)?;
        lines.push(CheckLine::at_most(
            format!("msr_cost_equivalence_max_gap_{name}"),
            report.max_profit_gap,
            1e-8,
        ));
        lines.push(CheckLine::at_most(
            format!("price_reachability_{name}"),
            report.max_reachability_gap,
            1e-6,
        ));
    }
    Ok(lines)
}

/// Criterion 8: the penalty <-> rule conversions are mutual inverses to
/// 1e-9 at random interior points for both built-in families.
pub fn criterion_round_trips(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = SplitMix64::new(seed ^ 0x5151);
    let mut lines = Vec::new();
    for (name, rule) in [
        ("log", make_log_rule(1.0)?),
        ("quad", make_quadratic_rule(1.0)?),
    ] {
        let alpha = penalty_from_rule(&rule);
        let back = rule_from_penalty(&alpha)?;
        let alpha_again = penalty_from_rule(&back);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let p = ProbVector::new(rng.simplex_point(3, 1e-3))?;
            worst = worst.max((alpha.value(p.as_slice()) - alpha_again.value(p.as_slice())).abs());
            for i in 0..3 {
                worst = worst.max((rule.score(&p, i) - back.score(&p, i)).abs());
            }
        }
        lines.push(CheckLine::at_most(
            format!("conversion_round_trip_{name}"),
            worst,
            1e-9,
        ));
    }
    Ok(lines)
}

/// Criterion 9: reduction weights equal FTRL weights to 1e-8 for both
/// penalty families, and tuned weighted-majority weights are invariant to
/// the market's liquidity parameter to 1e-10.
pub fn criterion_reduction_ftrl(seed: u64) -> Result<Vec<CheckLine>> {
    let n = 5usize;
    let mut rng = SplitMix64::new(seed ^ 0x0F0F);
    let mut lines = Vec::new();
    for (name, cf, reg) in [
        (
            "entropic",
            make_lmsr(1.0, n)?,
            PenaltyFunction::entropic(1.0)?,
        ),
        (
            "quadratic",
            make_quad(1.0, n)?,
            PenaltyFunction::quadratic(1.0)?,
        ),
    ] {
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let losses = rng.vec_range(n, 0.0, 25.0);
            let eps = rng.range(0.05, 2.0);
            let via_market = market_reduction_weights(&cf, eps, &losses)?;
            let via_ftrl = ftrl_weights(&reg, eps, &losses)?;
            worst = worst.max(via_market.max_abs_diff(&via_ftrl));
        }
        lines.push(CheckLine::at_most(
            format!("reduction_ftrl_identity_{name}"),
            worst,
            1e-8,
        ));
    }

    // b-invariance of the tuned log-market reduction.
    let t = 200usize;
    let losses = LossGenerator {
        kind: GeneratorKind::UniformRandom,
        seed: seed ^ 0x77,
        n: 10,
        t,
    }
    .generate()?;
    let mut traces = Vec::new();
    for b in [0.5, 5.0] {
        let cf = make_lmsr(b, 10)?;
        let eps = tune_epsilon(cf.loss_bound.unwrap(), cf.phi_bound.unwrap(), t)?;
        traces.push(run_learner(
            LearnerConfig::MarketReduction {
                cost_fn: cf,
                epsilon: eps,
            },
            &losses,
        )?);
    }
    let mut worst = 0.0f64;
    for (a, b) in traces[0].rows().iter().zip(traces[1].rows()) {
        for (x, y) in a.weights.iter().zip(b.weights.iter()) {
            worst = worst.max((x - y).abs());
        }
    }
    lines.push(CheckLine::at_most("wm_weights_b_invariance", worst, 1e-10));
    Ok(lines)
}

/// Criterion 10: both built-in markets pass all three validity properties on
/// 10^3 sampled points, and the deliberately broken cost `sum q_i^2` fails
/// translation invariance.
pub fn criterion_validity(seed: u64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for (name, cf) in [("lmsr", make_lmsr(1.0, 3)?), ("quad", make_quad(1.0, 3)?)] {
        let report = check_validity(&cf, 1000, seed)?;
        lines.push(CheckLine::at_most(
            format!("{name}_differentiability"),
            report.differentiability.worst_violation,
            1e-4,
        ));
        lines.push(CheckLine::at_most(
            format!("{name}_monotonicity"),
            report.monotonicity.worst_violation,
            1e-9,
        ));
        lines.push(CheckLine::at_most(
            format!("{name}_translation_invariance"),
            report.translation_invariance.worst_violation,
            1e-7,
        ));
    }
    let broken = CostFunction::from_fns(
        3,
        |q: &[f64]| q.iter().map(|&x| x * x).sum::<f64>(),
        |q: &[f64]| q.iter().map(|&x| 2.0 * x).collect(),
    );
    let report = check_validity(&broken, 100, seed)?;
    lines.push(CheckLine::at_least(
        "broken_cost_translation_violation",
        report.translation_invariance.worst_violation,
        1e-7,
    ));
    Ok(lines)
}

/// Criterion 11: the supremum solver dominates every 0.01-grid simplex point
/// for N <= 4, and the quadratic closed form matches the generic solver to
/// 1e-8 on 10^3 random quantity vectors.
pub fn criterion_solver_oracles(seed: u64) -> Result<Vec<CheckLine>> {
    let mut rng = SplitMix64::new(seed ^ 0x0011);
    let mut lines = Vec::new();

    for (name, alpha) in [
        ("entropic", PenaltyFunction::entropic(1.0)?),
        ("quadratic", PenaltyFunction::quadratic(1.0)?),
    ] {
        let mut worst_excess = f64::NEG_INFINITY;
        for n in [2usize, 3, 4] {
            for _ in 0..3 {
                let q = QuantityVector::new(rng.vec_range(n, -2.0, 2.0))?;
                let solved = maximize(&alpha, &q)?.cost;
                let mut grid_best = f64::NEG_INFINITY;
                simplex_grid(n, 100, &mut |p| {
                    let v: f64 = p.iter().zip(q.as_slice()).map(|(a, b)| a * b).sum::<f64>()
                        - alpha.value(p);
                    if v > grid_best {
                        grid_best = v;
                    }
                });
                worst_excess = worst_excess.max(grid_best - solved);
            }
        }
        lines.push(CheckLine::at_most(
            format!("grid_dominance_excess_{name}"),
            worst_excess,
            1e-6,
        ));
    }

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 2 + rng.below(4);
        let b = rng.range(0.3, 3.0);
        let q = QuantityVector::new(rng.vec_range(n, -4.0, 4.0))?;
        let (closed, _) = quad_price_closed_form(b, &q)?;
        let solved = maximize(&PenaltyFunction::quadratic(b)?, &q)?.prices;
        worst = worst.max(closed.max_abs_diff(&solved));
    }
    lines.push(CheckLine::at_most(
        "quad_closed_form_vs_solver",
        worst,
        1e-8,
    ));
    Ok(lines)
}

/// Run every check with one base seed.
pub fn verify_all(seed: u64) -> Result<Report> {
    let mut checks = Vec::new();
    checks.extend(criterion_wm_regret(seed)?);
    checks.extend(criterion_ogd_regret(seed)?);
    checks.extend(criterion_ftl_linear(seed)?);
    checks.extend(criterion_maker_loss(seed)?);
    checks.extend(criterion_phi_stability(seed)?);
    checks.extend(criterion_pricing_diff(seed)?);
    checks.extend(criterion_equivalence(seed)?);
    checks.extend(criterion_round_trips(seed)?);
    checks.extend(criterion_reduction_ftrl(seed)?);
    checks.extend(criterion_validity(seed)?);
    checks.extend(criterion_solver_oracles(seed)?);
    Ok(Report { checks })
}
