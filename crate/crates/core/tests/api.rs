//! End-to-end flows through the public API, including the README example.

use marketlearn::learning::{run_learner, tune_epsilon, LearnerConfig};
use marketlearn::scoring::{penalty_from_rule, rule_from_penalty};
use marketlearn::{
    make_lmsr, make_log_rule, make_quad, verify_equivalence, LossMatrix, MarketState, MsrState,
    ProbVector, QuantityVector, SplitMix64,
};

#[test]
fn readme_example() {
    let market = MarketState::new(make_lmsr(1.0, 2).unwrap()).unwrap();
    let (market, receipt) = market
        .trade(&QuantityVector::new(vec![1.0, 0.0]).unwrap())
        .unwrap();
    assert!((receipt.payment - 0.6201145069582778).abs() < 1e-12);
    assert!(market.realized_maker_loss(0).unwrap() <= 2.0f64.ln());

    let cf = make_lmsr(1.0, 2).unwrap();
    let losses = LossMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let eps = tune_epsilon(cf.loss_bound.unwrap(), cf.phi_bound.unwrap(), 2).unwrap();
    let learner = LearnerConfig::MarketReduction {
        cost_fn: cf,
        epsilon: eps,
    };
    let trace = run_learner(learner, &losses).unwrap();
    assert!(trace.final_regret() <= (2.0 * 2.0f64.ln() * 2.0 * 2.0).sqrt());
}

#[test]
fn msr_and_cost_market_pay_the_same_through_the_public_api() {
    // Walk an MSR and its cost-function twin through the same price path and
    // compare realized payoffs outcome by outcome.
    let rule = make_log_rule(1.0).unwrap();
    let mut msr = MsrState::new(rule.clone(), ProbVector::uniform(3)).unwrap();
    let mut market = MarketState::new(make_lmsr(1.0, 3).unwrap()).unwrap();

    let mut rng = SplitMix64::new(1001);
    for _ in 0..25 {
        let target = ProbVector::new(rng.simplex_point(3, 0.05)).unwrap();

        let (next_msr, payoff) = msr.trade(&target).unwrap();

        // Reach the same prices in the cost market via the score vector.
        let q_target = QuantityVector::new(rule.scores(&target)).unwrap();
        let step = q_target.add(&market.quantities().neg());
        let (next_market, receipt) = market.trade(&step).unwrap();
        assert!(next_market.prices().unwrap().max_abs_diff(&target) < 1e-9);

        for i in 0..3 {
            let cost_profit = step[i] - receipt.payment;
            assert!(
                (cost_profit - payoff[i]).abs() < 1e-9,
                "outcome {i}: {cost_profit} vs {}",
                payoff[i]
            );
        }
        msr = next_msr;
        market = next_market;
    }
}

#[test]
fn shared_types_are_send_and_sync() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<marketlearn::CostFunction>();
    assert_send_sync::<marketlearn::PenaltyFunction>();
    assert_send_sync::<marketlearn::ScoringRule>();
    assert_send_sync::<MarketState>();
    assert_send_sync::<MsrState>();
    assert_send_sync::<LearnerConfig>();
    assert_send_sync::<ProbVector>();
}

#[test]
fn custom_penalty_round_trip_builds_a_working_market() {
    // penalty -> rule -> penalty -> market, all through public constructors.
    let alpha = penalty_from_rule(&make_log_rule(2.0).unwrap());
    let rule = rule_from_penalty(&alpha).unwrap();
    let report = verify_equivalence(&rule, &make_lmsr(2.0, 3).unwrap(), 50, 9).unwrap();
    assert!(report.passed(), "{report:?}");

    let quad = make_quad(0.5, 4).unwrap();
    let state = MarketState::new(quad).unwrap();
    let (state, _) = state.accept_limit_order(2, 5.0, 0.55).unwrap();
    assert!(state.prices().unwrap()[2] <= 0.55 + 1e-8);
}
