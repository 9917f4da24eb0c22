//! Cost-function prediction market makers, market scoring rules, and their
//! correspondence to follow-the-regularized-leader learning.
//!
//! The crate is organized around one object: a convex penalty on the
//! probability simplex. Through `C(q) = sup_p (p . q - alpha(p))` a penalty
//! generates a valid cost-function market maker ([`cost_market`]); through
//! `s_i(p) = alpha(p) - p . grad alpha(p) + d alpha/d p_i` it generates a
//! strictly proper scoring rule ([`scoring`]); and used as a regularizer it
//! generates a no-regret expert learner whose weights are the market's
//! prices at the negated cumulative losses ([`learning`]). Every bound tying
//! these three views together is checked numerically by the test suites and
//! by the companion bench crate.

// Parameter guards are written `!(x > 0.0)` so NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost_market;
pub mod error;
pub mod learning;
pub mod penalty;
pub mod rng;
pub mod scoring;
pub mod types;

pub use cost_market::{
    check_validity, estimate_phi, make_custom, make_lmsr, make_quad, verify_pricing_diff_bound,
    BoundReport, CostFunction, MarketState, TradeReceipt, ValidityReport,
};
pub use error::{Error, Result};
pub use learning::{
    doubling_periods, ftrl_bound, ftrl_regret_decomposition, ftrl_weights,
    market_reduction_weights, reduction_regret_bound, run_learner, run_with_doubling, tune_epsilon,
    LearnerConfig, LearnerState, RegretTrace, TraceRow,
};
pub use penalty::{
    maximize, penalty_range, quad_price_closed_form, PenaltyFunction, PenaltyRange, SolveResult,
};
pub use rng::SplitMix64;
pub use scoring::{
    make_log_rule, make_quadratic_rule, msr_worst_case_loss, penalty_from_rule, rule_from_penalty,
    verify_equivalence, EquivalenceReport, MsrState, ScoringRule,
};
pub use types::{
    entropy, project_to_simplex, LossMatrix, ProbVector, QuantityVector, Tolerances, TOL,
};
