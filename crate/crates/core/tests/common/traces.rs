//! Hand-simulated orchestrator traces against the scripted trainer.
//!
//! Every scenario uses budgets `0, 1/255, …, 5/255` (indices 0..=5), bars
//! `(0.7, 0.5)` and a bootstrap robust only at 0. The mock evaluator pays
//! the stored nominal reward wherever the model is robust and 0 elsewhere.

use std::fmt::Debug;

use bcl_core::curriculum::{
    bcl_run, radial_curriculum_run, radial_plus_at_run, BclConfig, Model, PhaseRecord, RunOutcome,
    SkipPolicy, TrainRequest, Variant,
};
use bcl_core::dqn::LossMode;
use bcl_core::harness::mock::{MockEvaluator, MockModel, MockTrainer};
use bcl_core::rng::derive_seed;
use bcl_core::{BclError, Result};

use super::{eps, indices, seeds, small_config};

/// Budget `i` exactly as the curriculum computes it.
fn b(i: usize) -> f64 {
    small_config(Variant::BclC).curriculum().unwrap().budget(i)
}

pub type Check = std::result::Result<(), String>;

fn expect<T: PartialEq + Debug>(what: &str, got: T, want: T) -> Check {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn f0() -> MockModel {
    MockModel {
        robust_to: 0.0,
        nominal: 1.0,
        generation: 0,
    }
}

fn run_with<T>(config: &BclConfig, mut trainer: T) -> Result<RunOutcome<MockModel>>
where
    T: FnMut(&MockModel, &TrainRequest) -> Result<MockModel>,
{
    let mut eval = MockEvaluator::default();
    let mut log = |_: &PhaseRecord| Ok(());
    match config.variant {
        Variant::BclRadial => radial_curriculum_run(&f0(), config, &mut trainer, &mut eval, &mut log),
        Variant::BclRadialAt => radial_plus_at_run(&f0(), config, &mut trainer, &mut eval, &mut log),
        _ => bcl_run(&f0(), config, &mut trainer, &mut eval, &mut log),
    }
}

fn run_mock(config: &BclConfig, reach: usize) -> RunOutcome<MockModel> {
    let mut t = MockTrainer::new(reach, config.increment);
    run_with(config, |m: &MockModel, r: &TrainRequest| {
        use bcl_core::curriculum::Trainer;
        t.train(m, r)
    })
    .expect("mock run")
}

fn lows(records: &[PhaseRecord]) -> Vec<f64> {
    records.iter().map(|r| r.eps_lo).collect()
}

fn highs(records: &[PhaseRecord]) -> Vec<f64> {
    records.iter().map(|r| r.eps_hi).collect()
}

fn chosen(records: &[PhaseRecord]) -> Vec<Option<usize>> {
    records.iter().map(|r| r.chosen).collect()
}

fn chain_ok(f0: &MockModel, records: &[PhaseRecord]) -> Check {
    let mut prev = f0.fingerprint();
    for r in records {
        expect(&format!("bootstrap of phase {}", r.phase), r.bootstrap, prev)?;
        prev = r.selected.ok_or("phase without a selected model")?;
    }
    Ok(())
}

/// Reach 2: train ε₁ (robust to 3/255), skip to ε₄ (robust to 6/255), stop.
pub fn mos_skips() -> Check {
    let out = run_mock(&small_config(Variant::BclMos), 2);
    let r = &out.records;
    expect("indices", indices(r), vec![1, 4])?;
    expect("seeds", seeds(r), vec![vec![1], vec![4]])?;
    expect("eps_lo", lows(r), vec![b(0), b(3)])?;
    expect("eps_hi", highs(r), vec![b(1), b(4)])?;
    let next: Vec<Option<usize>> = r
        .iter()
        .map(|p| p.next.as_ref().and_then(|n| n.first_non_robust))
        .collect();
    expect("first non-robust", next, vec![Some(4), Some(6)])?;
    let probed: Vec<usize> = r[0].next.as_ref().unwrap().probes.iter().map(|p| p.index).collect();
    expect("probes after phase 0", probed, vec![2, 3, 4])?;
    expect("reached", out.reached_target, true)?;
    expect("eps_best", out.eps_best, eps(5))?;
    chain_ok(&f0(), r)
}

/// BCL-C: every budget in order, all `K` runs each, ties to run 1.
pub fn bcl_c_walks_every_budget() -> Check {
    let out = run_mock(&small_config(Variant::BclC), 2);
    let r = &out.records;
    expect("indices", indices(r), vec![1, 2, 3, 4, 5])?;
    let want: Vec<Vec<u64>> = (0..5u64).map(|p| (1..=3).map(|k| 3 * p + k).collect()).collect();
    expect("seeds", seeds(r), want)?;
    expect("chosen", chosen(r), vec![Some(1); 5])?;
    expect("eps_lo", lows(r), (0..5).map(b).collect())?;
    expect("probes", r.iter().all(|p| p.next.as_ref().unwrap().probes.is_empty()), true)?;
    expect("reached", out.reached_target, true)?;
    chain_ok(&f0(), r)
}

/// NCL is BCL-C with `K = 1`, trace for trace.
pub fn ncl_is_bcl_c_with_one_run() -> Check {
    let ncl = run_mock(&small_config(Variant::Ncl), 2);
    let mut one = small_config(Variant::BclC);
    one.k = 1;
    let bclc = run_mock(&one, 2);
    expect("ncl seeds", seeds(&ncl.records), (1..=5u64).map(|s| vec![s]).collect())?;
    let strip = |rs: &[PhaseRecord]| -> Vec<PhaseRecord> {
        rs.iter()
            .cloned()
            .map(|mut r| {
                r.stage.clear();
                r.wall_clock_secs = 0.0;
                r
            })
            .collect()
    };
    expect("ncl vs bcl-c(K=1)", strip(&ncl.records), strip(&bclc.records))
}

/// AT: one phase straight at the target with no ramp and one run.
pub fn at_is_single_shot() -> Check {
    let out = run_mock(&small_config(Variant::At), 2);
    let r = &out.records;
    expect("phases", r.len(), 1)?;
    expect("index", r[0].index, 1)?;
    expect("eps_lo", r[0].eps_lo, eps(5))?;
    expect("eps_hi", r[0].eps_hi, eps(5))?;
    expect("seeds", seeds(r), vec![vec![1]])?;
    expect("loss", r[0].loss_mode, LossMode::At)?;
    expect("reached", out.reached_target, true)
}

/// Efficacy bar 1.8 with `K_min = 2`: run 1 stays one increment short
/// (`V = 1.5`), run 2 overshoots (`V = 2`) and ends the phase.
pub fn k_min_and_efficacy() -> Check {
    let mut cfg = small_config(Variant::BclMos);
    cfg.k_min = 2;
    cfg.thresholds.efficacy = Some(1.8);
    let inc = cfg.increment;
    let out = run_with(&cfg, |m: &MockModel, r: &TrainRequest| {
        let robust_to = if r.run == 1 { r.eps_hi - inc } else { r.eps_hi + 2.0 * inc };
        Ok(MockModel {
            robust_to,
            nominal: m.nominal,
            generation: m.generation * 10 + r.run as u64,
        })
    })
    .map_err(|e| e.to_string())?;
    let r = &out.records;
    expect("indices", indices(r), vec![1, 4])?;
    expect("seeds", seeds(r), vec![vec![1, 2], vec![4, 5]])?;
    expect("chosen", chosen(r), vec![Some(2), Some(2)])?;
    let scores: Vec<Option<f64>> = r[0].runs.iter().map(|k| k.score).collect();
    expect("V_k", scores, vec![Some(1.5), Some(2.0)])?;
    expect("passed", r.iter().all(|p| p.passed), true)
}

/// No run clears the bar: all `K` runs, highest `V` (ties to run 1), phase
/// marked as not passed.
pub fn no_run_passes() -> Check {
    let mut cfg = small_config(Variant::BclC);
    cfg.thresholds.efficacy = Some(1.8);
    let inc = cfg.increment;
    let out = run_with(&cfg, |m: &MockModel, r: &TrainRequest| {
        Ok(MockModel {
            robust_to: r.eps_hi - inc,
            nominal: m.nominal,
            generation: m.generation * 10 + r.run as u64,
        })
    })
    .map_err(|e| e.to_string())?;
    let r = &out.records;
    expect("phases", r.len(), 5)?;
    expect("runs", r.iter().map(|p| p.runs.len()).collect::<Vec<_>>(), vec![3; 5])?;
    expect("chosen", chosen(r), vec![Some(1); 5])?;
    expect("passed", r.iter().any(|p| p.passed), false)
}

/// Every run of the first attempt fails numerically; the retry reseeds with
/// `derive_seed(seed, 1)` and succeeds.
pub fn numeric_retry() -> Check {
    let mut cfg = small_config(Variant::BclMos);
    cfg.k = 2;
    let inc = cfg.increment;
    let out = run_with(&cfg, |m: &MockModel, r: &TrainRequest| {
        let first_attempt = r.seed == (r.phase * 2 + r.run) as u64;
        if first_attempt {
            return Err(BclError::Numeric("scripted divergence".into()));
        }
        Ok(MockModel {
            robust_to: r.eps_hi + 2.0 * inc,
            nominal: m.nominal,
            generation: m.generation + 1,
        })
    })
    .map_err(|e| e.to_string())?;
    let r = &out.records;
    expect("indices", indices(r), vec![1, 4])?;
    expect("seeds", seeds(r), vec![vec![derive_seed(1, 1)], vec![derive_seed(3, 1)]])?;
    let always_fail = run_with(&cfg, |_: &MockModel, _: &TrainRequest| {
        Err(BclError::Numeric("scripted divergence".into()))
    });
    match always_fail {
        Err(e @ BclError::Numeric(_)) => expect("exit code", e.exit_code(), 3),
        other => Err(format!("expected a numeric error, got {:?}", other.map(|o| o.records.len()))),
    }
}

/// Nominal reward collapses above 2/255. With `M = 2` the RADIAL curriculum
/// trains ε₁, ε₂ (accepted on run 1), then ε₃, ε₄ (all runs below the bar)
/// and stops.
fn collapsing(inc: f64) -> impl FnMut(&MockModel, &TrainRequest) -> Result<MockModel> {
    move |m: &MockModel, r: &TrainRequest| {
        Ok(MockModel {
            robust_to: r.eps_hi + 3.0 * inc,
            nominal: if r.eps_hi <= eps(2) + 1e-12 { 1.0 } else { 0.5 },
            generation: m.generation * 10 + r.run as u64,
        })
    }
}

pub fn radial_counter_stops() -> Check {
    let cfg = small_config(Variant::BclRadial);
    let out = run_with(&cfg, collapsing(cfg.increment)).map_err(|e| e.to_string())?;
    let r = &out.records;
    expect("indices", indices(r), vec![1, 2, 3, 4])?;
    expect(
        "seeds",
        seeds(r),
        vec![vec![1], vec![4], vec![7, 8, 9], vec![10, 11, 12]],
    )?;
    expect("passed", r.iter().map(|p| p.passed).collect::<Vec<_>>(), vec![true, true, false, false])?;
    expect("loss", r.iter().all(|p| p.loss_mode == LossMode::Radial), true)?;
    expect("stop index", out.stop_index, 4)?;
    expect("reached", out.reached_target, false)?;
    chain_ok(&f0(), r)
}

/// Continues [`radial_counter_stops`]: the AT stage restarts two increments
/// below the stop (2/255), walks 3/255..5/255 with every run, and
/// bootstraps from the best RADIAL model (the ε₂ one, score 4/3).
pub fn radial_then_at() -> Check {
    let cfg = small_config(Variant::BclRadialAt);
    let out = run_with(&cfg, collapsing(cfg.increment)).map_err(|e| e.to_string())?;
    let r = &out.records;
    let stages: Vec<&str> = r.iter().map(|p| p.stage.as_str()).collect();
    expect("stages", stages, vec!["radial", "radial", "radial", "radial", "at", "at", "at"])?;
    expect("phase numbers", r.iter().map(|p| p.phase).collect::<Vec<_>>(), (0..7).collect())?;
    let base = b(4) - 2.0 * cfg.increment;
    let stage2 = vec![base + cfg.increment, base + 2.0 * cfg.increment, cfg.target];
    expect("stage-2 budgets", highs(&r[4..]), stage2)?;
    expect("stage-2 first ramp", r[4].eps_lo, base)?;
    expect("stage-2 bootstrap", Some(r[4].bootstrap), r[1].selected)?;
    let want: Vec<Vec<u64>> = (4..7u64).map(|p| (1..=3).map(|k| 3 * p + k).collect()).collect();
    expect("stage-2 seeds", seeds(&r[4..]), want)?;
    expect("stage-2 loss", r[4..].iter().all(|p| p.loss_mode == LossMode::At), true)?;
    expect("reached", out.reached_target, true)?;
    expect("eps_best", out.eps_best, eps(5))
}

/// A RADIAL stage that completes the curriculum leaves no AT stage.
pub fn radial_complete_skips_at() -> Check {
    let cfg = small_config(Variant::BclRadialAt);
    let out = run_mock(&cfg, 2);
    expect("stages", out.records.iter().all(|p| p.stage == "radial"), true)?;
    expect("phases", out.records.len(), 5)?;
    expect("reached", out.reached_target, true)
}

/// Variant reductions as seen by the planner.
pub fn plan_reductions() -> Check {
    let (c, k, k_min, policy, smooth) = small_config(Variant::At).plan().map_err(|e| e.to_string())?;
    expect("AT", (c.len(), k, k_min, policy, smooth), (1, 1, 1, SkipPolicy::AlwaysNext, false))?;
    let (c, k, k_min, policy, _) = small_config(Variant::Ncl).plan().map_err(|e| e.to_string())?;
    expect("NCL", (c.len(), k, k_min, policy), (5, 1, 1, SkipPolicy::AlwaysNext))?;
    let (_, k, k_min, policy, _) = small_config(Variant::BclC).plan().map_err(|e| e.to_string())?;
    expect("BCL-C", (k, k_min, policy), (3, 3, SkipPolicy::AlwaysNext))?;
    let (_, k, k_min, policy, _) = small_config(Variant::BclMos).plan().map_err(|e| e.to_string())?;
    expect("BCL-MOS", (k, k_min, policy), (3, 1, SkipPolicy::MaxSkip))
}

pub const SCENARIOS: &[(&str, fn() -> Check)] = &[
    ("mos skips", mos_skips),
    ("bcl-c walks every budget", bcl_c_walks_every_budget),
    ("ncl = bcl-c with K = 1", ncl_is_bcl_c_with_one_run),
    ("at is single shot", at_is_single_shot),
    ("k_min and efficacy", k_min_and_efficacy),
    ("no run passes", no_run_passes),
    ("numeric retry", numeric_retry),
    ("radial counter stops", radial_counter_stops),
    ("radial then at", radial_then_at),
    ("radial complete skips at", radial_complete_skips_at),
    ("plan reductions", plan_reductions),
];

/// `(MOS phases, BCL-C phases, both reached)` for reach `reach` on a
/// curriculum of `budgets` increments.
pub fn mos_vs_c(reach: usize, budgets: u32) -> (usize, usize, bool) {
    let mut mos = small_config(Variant::BclMos);
    mos.target = eps(budgets);
    let mut c = mos.clone();
    c.variant = Variant::BclC;
    let a = run_mock(&mos, reach);
    let b = run_mock(&c, reach);
    (a.records.len(), b.records.len(), a.reached_target && b.reached_target)
}
