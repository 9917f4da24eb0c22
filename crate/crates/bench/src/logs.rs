//! CSV artifact formats.
//!
//! Three formats, all plain CSV with a header row, floats rendered with
//! Rust's shortest round-trip formatting so identical runs produce
//! byte-identical files:
//!
//! - market session: `step,outcome_dim,shares,payment,price_1..price_N`
//! - MSR session: `step,report_1..report_N,payoff_if_1..payoff_if_N`
//! - regret trace: `t,alg_loss,best_expert_loss,regret,bound`
//!
//! `outcome_dim` and the `_1.._N` column suffixes are 1-based.

use std::fmt::Write as _;

use marketlearn::learning::RegretTrace;

/// One executed trade in a market session log.
#[derive(Debug, Clone)]
pub struct SessionRow {
    pub step: usize,
    /// 1-based outcome whose shares were traded.
    pub outcome_dim: usize,
    pub shares: f64,
    pub payment: f64,
    /// Prices after the trade.
    pub prices: Vec<f64>,
}

pub fn market_session_csv(n: usize, rows: &[SessionRow]) -> String {
    let mut out = String::from("step,outcome_dim,shares,payment");
    for i in 1..=n {
        let _ = write!(out, ",price_{i}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            row.step, row.outcome_dim, row.shares, row.payment
        );
        for p in &row.prices {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

/// One report change in an MSR session log.
#[derive(Debug, Clone)]
pub struct MsrRow {
    pub step: usize,
    pub report: Vec<f64>,
    /// Trader payoff for each possible outcome.
    pub payoff: Vec<f64>,
}

pub fn msr_session_csv(n: usize, rows: &[MsrRow]) -> String {
    let mut out = String::from("step");
    for i in 1..=n {
        let _ = write!(out, ",report_{i}");
    }
    for i in 1..=n {
        let _ = write!(out, ",payoff_if_{i}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{}", row.step);
        for x in &row.report {
            let _ = write!(out, ",{x}");
        }
        for x in &row.payoff {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}

/// Anytime regret guarantee of a tuned reduction; fills the trace CSV's
/// bound column with `B/eps + eps phi t / 2`, which at the tuned epsilon
/// equals `sqrt(2 B phi T)` at the horizon.
#[derive(Debug, Clone, Copy)]
pub struct BoundConfig {
    pub loss_bound: f64,
    pub phi: f64,
    pub epsilon: f64,
}

impl BoundConfig {
    pub fn at_round(&self, t: usize) -> f64 {
        self.loss_bound / self.epsilon + self.epsilon * self.phi * t as f64 / 2.0
    }
}

pub fn regret_trace_csv(trace: &RegretTrace, bound: Option<&BoundConfig>) -> String {
    let mut out = String::from("t,alg_loss,best_expert_loss,regret,bound\n");
    for row in trace.rows() {
        let _ = write!(
            out,
            "{},{},{},{},",
            row.round, row.alg_loss, row.best_expert_loss, row.regret
        );
        if let Some(b) = bound {
            let _ = write!(out, "{}", b.at_round(row.round));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use marketlearn::learning::{run_learner, LearnerConfig};
    use marketlearn::LossMatrix;

    #[test]
    fn market_session_header_and_rows() {
        let rows = vec![SessionRow {
            step: 1,
            outcome_dim: 2,
            shares: 0.5,
            payment: 0.25,
            prices: vec![0.4, 0.6],
        }];
        let csv = market_session_csv(2, &rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,outcome_dim,shares,payment,price_1,price_2"
        );
        assert_eq!(lines.next().unwrap(), "1,2,0.5,0.25,0.4,0.6");
    }

    #[test]
    fn msr_session_header() {
        let csv = msr_session_csv(3, &[]);
        assert_eq!(
            csv.trim_end(),
            "step,report_1,report_2,report_3,payoff_if_1,payoff_if_2,payoff_if_3"
        );
    }

    #[test]
    fn msr_session_from_live_market() {
        use marketlearn::{make_log_rule, MsrState, ProbVector, SplitMix64};

        let mut market =
            MsrState::new(make_log_rule(1.0).unwrap(), ProbVector::uniform(3)).unwrap();
        let mut rng = SplitMix64::new(2);
        let mut rows = Vec::new();
        for step in 1..=10 {
            let report = ProbVector::new(rng.simplex_point(3, 0.01)).unwrap();
            let (next, payoff) = market.trade(&report).unwrap();
            rows.push(MsrRow {
                step,
                report: report.to_vec(),
                payoff,
            });
            market = next;
        }
        let csv = msr_session_csv(3, &rows);
        assert_eq!(csv.lines().count(), 11);
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').count(), 7);
        }
        // Byte-identical on regeneration.
        assert_eq!(csv, msr_session_csv(3, &rows));
    }

    #[test]
    fn regret_trace_bound_column() {
        let losses = LossMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let trace = run_learner(LearnerConfig::FollowTheLeader, &losses).unwrap();
        let bound = BoundConfig {
            loss_bound: 1.0,
            phi: 2.0,
            epsilon: 1.0,
        };
        let csv = regret_trace_csv(&trace, Some(&bound));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,alg_loss,best_expert_loss,regret,bound");
        assert!(lines[1].starts_with("1,"));
        assert!(lines[1].ends_with(",2")); // 1/1 + 1*2*1/2 = 2
        assert!(lines[2].ends_with(",3"));

        let without = regret_trace_csv(&trace, None);
        assert!(without.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn tuned_bound_matches_horizon_guarantee() {
        let (b_loss, phi, t) = (2.0f64.ln(), 2.0, 1000usize);
        let eps = (2.0 * b_loss / (phi * t as f64)).sqrt();
        let cfg = BoundConfig {
            loss_bound: b_loss,
            phi,
            epsilon: eps,
        };
        let horizon = (2.0 * b_loss * phi * t as f64).sqrt();
        assert!((cfg.at_round(t) - horizon).abs() < 1e-9);
    }
}
