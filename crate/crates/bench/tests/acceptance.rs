//! Acceptance suite: every bound and equivalence the library claims, run at
//! its stated tolerance. One test per criterion; each prints a pass/fail
//! line with the observed value and the bound.

use std::time::Instant;

use marketlearn_bench::verify;

fn run_criterion(label: &str, lines: Vec<verify::CheckLine>, time_limit: Option<(Instant, f64)>) {
    let elapsed = time_limit.map(|(start, _)| start.elapsed().as_secs_f64());
    let all_pass = lines.iter().all(|l| l.pass);
    let within_time = match (elapsed, time_limit) {
        (Some(secs), Some((_, limit))) => secs < limit,
        _ => true,
    };
    for line in &lines {
        println!("  {}", line.render());
    }
    match elapsed {
        Some(secs) => println!(
            "{label}: {} ({secs:.2}s)",
            if all_pass && within_time {
                "PASS"
            } else {
                "FAIL"
            }
        ),
        None => println!("{label}: {}", if all_pass { "PASS" } else { "FAIL" }),
    }
    assert!(all_pass, "{label}: some checks failed");
    if let (Some(secs), Some((_, limit))) = (elapsed, time_limit) {
        assert!(secs < limit, "{label}: took {secs:.2}s, limit {limit}s");
    }
}

#[test]
fn criterion_01_wm_regret_bound() {
    let start = Instant::now();
    let lines = verify::criterion_wm_regret(0).unwrap();
    run_criterion(
        "criterion 1 (weighted-majority regret <= 2 sqrt(T ln N))",
        lines,
        Some((start, 10.0)),
    );
}

#[test]
fn criterion_02_gradient_descent_regret_bound() {
    let start = Instant::now();
    let lines = verify::criterion_ogd_regret(0).unwrap();
    run_criterion(
        "criterion 2 (gradient-descent regret <= N sqrt(T))",
        lines,
        Some((start, 10.0)),
    );
}

#[test]
fn criterion_03_ftl_linear_regret() {
    run_criterion(
        "criterion 3 (follow-the-leader loses linearly, weighted majority does not)",
        verify::criterion_ftl_linear(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_04_worst_case_maker_loss() {
    run_criterion(
        "criterion 4 (maker loss <= b ln N and b (N-1)/N)",
        verify::criterion_maker_loss(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_05_phi_stability() {
    run_criterion(
        "criterion 5 (price sensitivity <= 2/b and (N^2-1)/(2b))",
        verify::criterion_phi_stability(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_06_pricing_difference_inequality() {
    run_criterion(
        "criterion 6 (|C(q+r) - C(q) - p.r| <= eps^2 phi / 2)",
        verify::criterion_pricing_diff(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_07_msr_cost_equivalence() {
    run_criterion(
        "criterion 7 (MSR and cost-market profits agree; prices reachable)",
        verify::criterion_equivalence(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_08_conversion_round_trips() {
    run_criterion(
        "criterion 8 (penalty <-> rule conversions are mutual inverses)",
        verify::criterion_round_trips(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_09_reduction_equals_ftrl() {
    run_criterion(
        "criterion 9 (reduction weights equal FTRL weights; b-invariance)",
        verify::criterion_reduction_ftrl(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_10_validity_checker() {
    run_criterion(
        "criterion 10 (validity properties pass; broken cost caught)",
        verify::criterion_validity(0).unwrap(),
        None,
    );
}

#[test]
fn criterion_11_solver_oracles() {
    run_criterion(
        "criterion 11 (grid dominance; closed form matches solver)",
        verify::criterion_solver_oracles(0).unwrap(),
        None,
    );
}

#[test]
fn full_report_all_pass() {
    let report = verify::verify_all(0).unwrap();
    assert!(report.all_pass(), "\n{}", report.render());
    // The report carries its named summary lines at the expected magnitudes.
    let phi_line = report
        .checks
        .iter()
        .find(|c| c.name == "lmsr_phi_estimate_b1_n2")
        .expect("phi line present");
    assert!(phi_line.observed <= 2.001);
    let gap_line = report
        .checks
        .iter()
        .find(|c| c.name.starts_with("msr_cost_equivalence_max_gap"))
        .expect("equivalence line present");
    assert!(gap_line.observed <= 1e-8);
}
