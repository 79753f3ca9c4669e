use std::time::Instant;

use super::probe::{choose_next, CachedEval, SkipPolicy, ThresholdPolicy};
use super::schedule::{make_curriculum, Curriculum};
use super::{
    model_score, phase_eval_score, BclConfig, Evaluator, Model, PhaseRecord, RunRecord,
    TrainRequest, Trainer,
};
use crate::dqn::LossMode;
use crate::error::{BclError, Result};
use crate::rng::derive_seed;

/// Result of an orchestrated run.
#[derive(Debug, Clone)]
pub struct RunOutcome<M> {
    /// Model after the last phase.
    pub model: M,
    /// Highest [`model_score`] among the phase winners (and the bootstrap).
    pub best_along_path: M,
    pub best_score: f64,
    pub records: Vec<PhaseRecord>,
    /// Largest budget the final model is known to have reached.
    pub eps_best: f64,
    pub reached_target: bool,
    /// Curriculum index of the last trained phase (0 if none ran).
    pub stop_index: usize,
}

pub type PhaseLog<'a> = dyn FnMut(&PhaseRecord) -> Result<()> + 'a;

#[derive(Clone, Copy)]
enum Rule {
    /// Break on `V_k ≥ V̄` once `k ≥ K_min`; keep the highest `V_k`.
    Efficacy { k_min: usize },
    /// Accept the first run with nominal reward above the bar, else keep the
    /// highest nominal reward.
    Nominal,
}

struct PhaseSpec {
    phase: usize,
    index: usize,
    eps_prev: f64,
    eps: f64,
    smooth: bool,
    k: usize,
    rule: Rule,
    loss_mode: LossMode,
    base_seed: u64,
}

fn score_path<M: Model, E: Evaluator<M>>(model: &M, budgets: &[f64; 3], eval: &mut E) -> Result<f64> {
    let nominal = eval.nominal(model)?;
    let mut adv = [0.0; 3];
    for (a, b) in adv.iter_mut().zip(budgets) {
        *a = eval.adversarial(model, *b)?;
    }
    Ok(model_score(nominal, &adv))
}

/// Up to `K` runs from `bootstrap`, with one full retry when every run
/// fails numerically. Returns the record (without `next`) and the winner.
fn run_phase<M, T, E>(
    bootstrap: &M,
    spec: &PhaseSpec,
    stage: &str,
    thresholds: &ThresholdPolicy,
    trainer: &mut T,
    eval: &mut E,
) -> Result<(PhaseRecord, M)>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    let started = Instant::now();
    let eps_lo = if spec.smooth { spec.eps_prev } else { spec.eps };
    for attempt in 0..2u64 {
        let mut runs = Vec::new();
        let mut models: Vec<Option<M>> = Vec::new();
        let mut passed = false;
        for k in 1..=spec.k {
            let mut seed = spec
                .base_seed
                .wrapping_add((spec.phase * spec.k + k) as u64);
            if attempt > 0 {
                seed = derive_seed(seed, attempt);
            }
            let request = TrainRequest {
                eps_lo,
                eps_hi: spec.eps,
                seed,
                loss_mode: spec.loss_mode,
                phase: spec.phase,
                run: k,
            };
            let trained = match trainer.train(bootstrap, &request) {
                Ok(m) => Some(m),
                Err(BclError::Numeric(msg)) => {
                    log::warn!("phase {} run {k} failed: {msg}", spec.phase);
                    None
                }
                Err(e) => return Err(e),
            };
            let mut rec = RunRecord {
                k,
                seed,
                score: None,
                nominal: None,
                adv: None,
                adv_prev: None,
                failed: trained.is_none(),
                fingerprint: trained.as_ref().map(Model::fingerprint),
            };
            let mut stop = false;
            if let Some(m) = &trained {
                let nominal = eval.nominal(m)?;
                rec.nominal = Some(nominal);
                match spec.rule {
                    Rule::Efficacy { k_min } => {
                        let adv = eval.adversarial(m, spec.eps)?;
                        let adv_prev = eval.adversarial(m, spec.eps_prev)?;
                        let v = phase_eval_score(nominal, adv, adv_prev);
                        rec.adv = Some(adv);
                        rec.adv_prev = Some(adv_prev);
                        rec.score = Some(v);
                        if v >= thresholds.efficacy() {
                            passed = true;
                            stop = k >= k_min;
                        }
                    }
                    Rule::Nominal => {
                        rec.score = Some(nominal);
                        if nominal >= thresholds.nominal {
                            passed = true;
                            stop = true;
                        }
                    }
                }
            }
            runs.push(rec);
            models.push(trained);
            if stop {
                break;
            }
        }
        let chosen = match spec.rule {
            Rule::Nominal if passed => runs.iter().position(|r| {
                r.nominal.is_some_and(|n| n >= thresholds.nominal)
            }),
            _ => argmax_score(&runs),
        };
        if let Some(c) = chosen {
            let model = models[c].take().expect("chosen run has a model");
            let record = PhaseRecord {
                phase: spec.phase,
                stage: stage.to_string(),
                index: spec.index,
                eps_lo,
                eps_hi: spec.eps,
                loss_mode: spec.loss_mode,
                bootstrap: bootstrap.fingerprint(),
                runs,
                chosen: Some(c + 1),
                selected: Some(model.fingerprint()),
                passed,
                next: None,
                wall_clock_secs: started.elapsed().as_secs_f64(),
            };
            return Ok((record, model));
        }
        log::warn!("phase {}: all {} runs failed, retrying once", spec.phase, spec.k);
    }
    Err(BclError::Numeric(format!(
        "phase {} at budget {}: every run failed twice",
        spec.phase, spec.eps
    )))
}

/// Highest score, lowest `k` on ties; `None` if every run failed.
fn argmax_score(runs: &[RunRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in runs.iter().enumerate() {
        if let Some(s) = r.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

#[allow(clippy::too_many_arguments)]
fn bcl_loop<M, T, E>(
    f0: &M,
    curriculum: &Curriculum,
    k: usize,
    k_min: usize,
    policy: SkipPolicy,
    smooth: bool,
    config: &BclConfig,
    stage: &str,
    phase_offset: usize,
    trainer: &mut T,
    eval: &mut E,
    log: &mut PhaseLog<'_>,
) -> Result<RunOutcome<M>>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    let th = config.thresholds;
    let target = curriculum.target();
    let mut model = f0.clone();
    let mut best = f0.clone();
    let mut best_score = score_path(f0, &config.score_budgets, eval)?;
    let mut next = choose_next(&model, curriculum, 0, &th, policy, eval)?;
    let mut records = Vec::new();
    let mut stop_index = 0;
    while next.eps_best < target {
        let i = next.index;
        let spec = PhaseSpec {
            phase: phase_offset + records.len(),
            index: i,
            eps_prev: curriculum.budget(i - 1),
            eps: curriculum.budget(i),
            smooth,
            k,
            rule: Rule::Efficacy { k_min },
            loss_mode: LossMode::At,
            base_seed: config.base_seed,
        };
        let (mut record, winner) = run_phase(&model, &spec, stage, &th, trainer, eval)?;
        model = winner;
        stop_index = i;
        let s = score_path(&model, &config.score_budgets, eval)?;
        if s > best_score {
            best_score = s;
            best = model.clone();
        }
        next = choose_next(&model, curriculum, i, &th, policy, eval)?;
        record.next = Some(next.clone());
        log(&record)?;
        records.push(record);
    }
    Ok(RunOutcome {
        model,
        best_along_path: best,
        best_score,
        records,
        eps_best: next.eps_best,
        reached_target: next.eps_best >= target,
        stop_index,
    })
}

fn check_bootstrap<M: Model, E: Evaluator<M>>(
    f0: &M,
    eps0: f64,
    th: &ThresholdPolicy,
    eval: &mut E,
) -> Result<()> {
    let nominal = eval.nominal(f0)?;
    let adv = eval.adversarial(f0, eps0)?;
    if nominal < th.nominal || adv < th.adv {
        log::warn!(
            "bootstrap model misses the base bar at eps0 = {eps0}: nominal {nominal}, adv {adv}"
        );
    }
    Ok(())
}

/// The BCL loop for the `at`, `ncl`, `bcl_c` and `bcl_mos` variants.
///
/// Run `k` (1-based) of phase `p` (0-based) is seeded with
/// `base_seed + p·K + k`. Evaluations are memoized per model fingerprint.
pub fn bcl_run<M, T, E>(
    f0: &M,
    config: &BclConfig,
    trainer: &mut T,
    eval: &mut E,
    log: &mut PhaseLog<'_>,
) -> Result<RunOutcome<M>>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    config.validate()?;
    if matches!(config.variant, super::Variant::BclRadial | super::Variant::BclRadialAt) {
        return Err(BclError::config(
            "curriculum.variant",
            "RADIAL variants run through radial_curriculum_run / radial_plus_at_run",
        ));
    }
    let (curriculum, k, k_min, policy, smooth) = config.plan()?;
    let mut cached = CachedEval::new(eval);
    check_bootstrap(f0, curriculum.eps0, &config.thresholds, &mut cached)?;
    bcl_loop(
        f0,
        &curriculum,
        k,
        k_min,
        policy,
        smooth,
        config,
        config.variant.name(),
        0,
        trainer,
        &mut cached,
        log,
    )
}

/// Baseline-order RADIAL curriculum with nominal-reward retries and an
/// `M`-consecutive-failure stop.
pub fn radial_curriculum_run<M, T, E>(
    f0: &M,
    config: &BclConfig,
    trainer: &mut T,
    eval: &mut E,
    log: &mut PhaseLog<'_>,
) -> Result<RunOutcome<M>>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    config.validate()?;
    let curriculum = config.curriculum()?;
    let mut cached = CachedEval::new(eval);
    radial_loop(f0, &curriculum, config, trainer, &mut cached, log)
}

fn radial_loop<M, T, E>(
    f0: &M,
    curriculum: &Curriculum,
    config: &BclConfig,
    trainer: &mut T,
    eval: &mut E,
    log: &mut PhaseLog<'_>,
) -> Result<RunOutcome<M>>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    let th = config.thresholds;
    let mut model = f0.clone();
    let mut best = f0.clone();
    let mut best_score = score_path(f0, &config.score_budgets, eval)?;
    let mut records = Vec::new();
    let mut below = 0usize;
    let mut stop_index = 0;
    for i in 1..=curriculum.len() {
        let spec = PhaseSpec {
            phase: records.len(),
            index: i,
            eps_prev: curriculum.budget(i - 1),
            eps: curriculum.budget(i),
            smooth: config.smooth,
            k: config.k,
            rule: Rule::Nominal,
            loss_mode: LossMode::Radial,
            base_seed: config.base_seed,
        };
        let (record, winner) = run_phase(&model, &spec, "radial", &th, trainer, eval)?;
        model = winner;
        stop_index = i;
        below = if record.passed { 0 } else { below + 1 };
        let s = score_path(&model, &config.score_budgets, eval)?;
        if s > best_score {
            best_score = s;
            best = model.clone();
        }
        log(&record)?;
        records.push(record);
        if below >= config.m {
            break;
        }
    }
    let completed = stop_index == curriculum.len() && below < config.m;
    Ok(RunOutcome {
        model,
        best_along_path: best,
        best_score,
        records,
        eps_best: curriculum.budget(stop_index),
        reached_target: completed,
        stop_index,
    })
}

/// RADIAL curriculum until it stops, then the AT curriculum from a budget
/// `at_restart_increments` below the stop point, bootstrapped from the
/// RADIAL stage's best-along-path model. A RADIAL stage that completes the
/// whole curriculum leaves nothing for the AT stage to do.
pub fn radial_plus_at_run<M, T, E>(
    f0: &M,
    config: &BclConfig,
    trainer: &mut T,
    eval: &mut E,
    log: &mut PhaseLog<'_>,
) -> Result<RunOutcome<M>>
where
    M: Model,
    T: Trainer<M>,
    E: Evaluator<M>,
{
    config.validate()?;
    let curriculum = config.curriculum()?;
    let mut cached = CachedEval::new(eval);
    let stage1 = radial_loop(f0, &curriculum, config, trainer, &mut cached, log)?;
    if stage1.records.is_empty() {
        return Err(BclError::Protocol("RADIAL stage finished no phase".into()));
    }
    if stage1.reached_target {
        return Ok(stage1);
    }
    let eps_stop = curriculum.budget(stage1.stop_index);
    let base = (eps_stop - config.at_restart_increments as f64 * config.increment).max(0.0);
    let at_curriculum = make_curriculum(base, config.target, config.increment)?;
    let (k, k_min) = match config.at_stage_policy {
        SkipPolicy::AlwaysNext => (config.k, config.k),
        SkipPolicy::MaxSkip => (config.k, config.k_min),
    };
    let stage2 = bcl_loop(
        &stage1.best_along_path,
        &at_curriculum,
        k,
        k_min,
        config.at_stage_policy,
        config.smooth,
        config,
        "at",
        stage1.records.len(),
        trainer,
        &mut cached,
        log,
    )?;
    let mut records = stage1.records;
    records.extend(stage2.records);
    let (best_along_path, best_score) = if stage2.best_score > stage1.best_score {
        (stage2.best_along_path, stage2.best_score)
    } else {
        (stage1.best_along_path, stage1.best_score)
    };
    Ok(RunOutcome {
        model: stage2.model,
        best_along_path,
        best_score,
        records,
        eps_best: stage2.eps_best,
        reached_target: stage2.reached_target,
        stop_index: stage2.stop_index,
    })
}
