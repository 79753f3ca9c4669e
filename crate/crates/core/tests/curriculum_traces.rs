mod common;

use bcl_core::curriculum::{choose_next, make_curriculum, SkipPolicy, ThresholdPolicy};
use bcl_core::harness::mock::{MockEvaluator, MockModel};

use common::traces::{self, mos_vs_c};

fn check(f: fn() -> traces::Check) {
    if let Err(msg) = f() {
        panic!("{msg}");
    }
}

#[test]
fn mos_skips() {
    check(traces::mos_skips);
}

#[test]
fn bcl_c_walks_every_budget() {
    check(traces::bcl_c_walks_every_budget);
}

#[test]
fn ncl_is_bcl_c_with_one_run() {
    check(traces::ncl_is_bcl_c_with_one_run);
}

#[test]
fn at_is_single_shot() {
    check(traces::at_is_single_shot);
}

#[test]
fn k_min_and_efficacy() {
    check(traces::k_min_and_efficacy);
}

#[test]
fn no_run_passes() {
    check(traces::no_run_passes);
}

#[test]
fn numeric_retry() {
    check(traces::numeric_retry);
}

#[test]
fn radial_counter_stops() {
    check(traces::radial_counter_stops);
}

#[test]
fn radial_then_at() {
    check(traces::radial_then_at);
}

#[test]
fn radial_complete_skips_at() {
    check(traces::radial_complete_skips_at);
}

#[test]
fn plan_reductions() {
    check(traces::plan_reductions);
}

fn model(robust_to: f64, nominal: f64) -> MockModel {
    MockModel {
        robust_to,
        nominal,
        generation: 0,
    }
}

#[test]
fn always_next_does_not_probe() {
    let c = make_curriculum(0.0, 0.1, 0.02).unwrap();
    let mut eval = MockEvaluator::default();
    let th = ThresholdPolicy::new(0.7, 0.5);
    let next = choose_next(&model(0.0, 1.0), &c, 2, &th, SkipPolicy::AlwaysNext, &mut eval).unwrap();
    assert_eq!(next.index, 3);
    assert_eq!(next.first_non_robust, None);
    assert_eq!(eval.calls, 0);
}

#[test]
fn max_skip_sentinel_when_robust_everywhere() {
    let c = make_curriculum(0.0, 0.1, 0.02).unwrap();
    let mut eval = MockEvaluator::default();
    let th = ThresholdPolicy::new(0.7, 0.5);
    let next = choose_next(&model(1.0, 1.0), &c, 0, &th, SkipPolicy::MaxSkip, &mut eval).unwrap();
    assert_eq!(next.first_non_robust, Some(c.len() + 1));
    assert_eq!(next.index, c.len() + 1);
    assert_eq!(next.eps_best, c.target());
    assert_eq!(next.probes.len(), c.len());
}

#[test]
fn low_nominal_skips_probing() {
    let c = make_curriculum(0.0, 0.1, 0.02).unwrap();
    let mut eval = MockEvaluator::default();
    let th = ThresholdPolicy::new(0.7, 0.5);
    let next = choose_next(&model(1.0, 0.2), &c, 1, &th, SkipPolicy::MaxSkip, &mut eval).unwrap();
    assert_eq!(next.index, 2);
    assert!(next.probes.is_empty());
    assert_eq!(eval.calls, 1);
}

#[test]
fn mos_beats_c_on_the_mock_family() {
    for reach in 1..=4 {
        for budgets in [5, 10, 25] {
            let (mos, c, reached) = mos_vs_c(reach, budgets);
            assert!(reached, "reach {reach}, {budgets} budgets");
            assert!(mos < c, "reach {reach}, {budgets} budgets: {mos} vs {c}");
        }
    }
}

#[test]
fn traces_are_fast() {
    let t = std::time::Instant::now();
    for (_, f) in traces::SCENARIOS {
        f().unwrap();
    }
    assert!(t.elapsed().as_secs_f64() < 1.0);
}
