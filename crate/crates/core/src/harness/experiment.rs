use std::cell::RefCell;
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checkpoint::{save_checkpoint, TrainedModel};
use super::config::{ExperimentConfig, TrainerSettings};
use super::eval::{evaluate, SuiteConfig};
use super::ledger::{Ledger, LedgerEntry, Timing};
use super::mock::{MockEvaluator, MockModel, MockTrainer};
use super::report::{BudgetCell, Cell, FinalEval};
use crate::curriculum::{
    bcl_run, model_score, radial_curriculum_run, radial_plus_at_run, BclConfig, Evaluator, Model,
    PhaseRecord, RunOutcome, TrainRequest, Trainer, Variant,
};
use crate::dqn::{train_dqn_phase, DqnTrainerConfig, LossMode};
use crate::envs::EnvKind;
use crate::error::Result;
use crate::nn::{Network, NetworkSpec};
use crate::ppo::{train_ppo_phase, PpoConfig, PpoModel};
use crate::rng::derive_seed;

/// Where a model came from, for the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Probe,
    Final,
}

/// The pieces of an experiment that depend on the trainer kind.
trait Backend {
    type M: Model;
    fn bootstrap(&mut self, seed: u64) -> Result<Self::M>;
    fn train(&mut self, init: &Self::M, request: &TrainRequest) -> Result<Self::M>;
    /// `(mean, sem)`; `epsilon = None` is the clean run, otherwise the
    /// worst attack of the relevant suite.
    fn evaluate(&mut self, model: &Self::M, epsilon: Option<f64>, purpose: Purpose) -> Result<(f64, f64)>;
    fn persist(&self, model: &Self::M) -> Option<TrainedModel>;
}

struct LearnedBackend<M> {
    env: EnvKind,
    eval_seed: u64,
    episodes: usize,
    probe_episodes: usize,
    suite: SuiteConfig,
    probe: SuiteConfig,
    init: Box<dyn Fn(u64) -> Result<M>>,
    step: Box<dyn Fn(&M, &TrainRequest, Option<usize>) -> Result<M>>,
    bootstrap_frames: Option<usize>,
    wrap: fn(&M) -> TrainedModel,
}

impl<M: Model> Backend for LearnedBackend<M> {
    type M = M;

    fn bootstrap(&mut self, seed: u64) -> Result<M> {
        let fresh = (self.init)(derive_seed(seed, 0xF0))?;
        let request = TrainRequest {
            eps_lo: 0.0,
            eps_hi: 0.0,
            seed: derive_seed(seed, 0xF1),
            loss_mode: LossMode::Standard,
            phase: 0,
            run: 0,
        };
        (self.step)(&fresh, &request, self.bootstrap_frames)
    }

    fn train(&mut self, init: &M, request: &TrainRequest) -> Result<M> {
        (self.step)(init, request, None)
    }

    fn evaluate(&mut self, model: &M, epsilon: Option<f64>, purpose: Purpose) -> Result<(f64, f64)> {
        let trained = (self.wrap)(model);
        let (suite, episodes) = match purpose {
            Purpose::Probe => (&self.probe, self.probe_episodes),
            Purpose::Final => (&self.suite, self.episodes),
        };
        let specs = match epsilon {
            Some(e) if e > 0.0 => suite.at(e)?,
            _ => Vec::new(),
        };
        let s = evaluate(trained.scores(), self.env, &specs, episodes, self.eval_seed, "")?;
        Ok(match (s.worst, s.worst_sem) {
            (Some(w), Some(sem)) => (w, sem),
            _ => (s.nominal.mean, s.nominal.sem),
        })
    }

    fn persist(&self, model: &M) -> Option<TrainedModel> {
        Some((self.wrap)(model))
    }
}

struct MockBackend {
    trainer: MockTrainer,
    eval: MockEvaluator,
    eps0: f64,
    bootstrap_reach: usize,
}

impl Backend for MockBackend {
    type M = MockModel;

    fn bootstrap(&mut self, _seed: u64) -> Result<MockModel> {
        Ok(MockModel {
            robust_to: self.eps0 + self.bootstrap_reach as f64 * self.trainer.increment,
            nominal: 1.0,
            generation: 0,
        })
    }

    fn train(&mut self, init: &MockModel, request: &TrainRequest) -> Result<MockModel> {
        self.trainer.train(init, request)
    }

    fn evaluate(&mut self, model: &MockModel, epsilon: Option<f64>, _: Purpose) -> Result<(f64, f64)> {
        let v = match epsilon {
            None => self.eval.nominal(model)?,
            Some(e) => self.eval.adversarial(model, e)?,
        };
        Ok((v, 0.0))
    }

    fn persist(&self, _: &MockModel) -> Option<TrainedModel> {
        None
    }
}

/// Per-method, per-seed outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub seed: u64,
    pub phases: usize,
    pub trained_budgets: Vec<f64>,
    pub eps_best: f64,
    pub reached_target: bool,
    pub final_eval: FinalEval,
    pub best_eval: FinalEval,
    pub checkpoints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub out_dir: PathBuf,
    pub runs: Vec<RunSummary>,
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    ledger: &'a Ledger,
    ckpt_dir: PathBuf,
}

impl Ctx<'_> {
    fn append(&self, kind: &str, method: &str, seed: u64, data: serde_json::Value, elapsed: Option<f64>) -> Result<()> {
        self.ledger.append(&LedgerEntry {
            kind: kind.to_string(),
            experiment: self.config.name.clone(),
            method: method.to_string(),
            seed,
            data,
            timing: Some(Timing::now(elapsed)),
        })
    }
}

struct TrainAdapter<'a, B: Backend> {
    backend: &'a RefCell<B>,
    produced: &'a RefCell<HashMap<u64, B::M>>,
}

impl<B: Backend> Trainer<B::M> for TrainAdapter<'_, B> {
    fn train(&mut self, init: &B::M, request: &TrainRequest) -> Result<B::M> {
        let m = self.backend.borrow_mut().train(init, request)?;
        self.produced.borrow_mut().insert(m.fingerprint(), m.clone());
        Ok(m)
    }
}

struct EvalAdapter<'a, 'c, B: Backend> {
    backend: &'a RefCell<B>,
    ctx: &'a Ctx<'c>,
    method: &'a str,
    seed: u64,
}

impl<B: Backend> EvalAdapter<'_, '_, B> {
    fn run(&mut self, model: &B::M, epsilon: Option<f64>) -> Result<f64> {
        let started = Instant::now();
        let (mean, sem) = self
            .backend
            .borrow_mut()
            .evaluate(model, epsilon, Purpose::Probe)?;
        self.ctx.append(
            "eval",
            self.method,
            self.seed,
            json!({
                "model": format!("{:016x}", model.fingerprint()),
                "epsilon": epsilon.unwrap_or(0.0),
                "attacked": epsilon.is_some(),
                "mean": mean,
                "sem": sem,
            }),
            Some(started.elapsed().as_secs_f64()),
        )?;
        Ok(mean)
    }
}

impl<B: Backend> Evaluator<B::M> for EvalAdapter<'_, '_, B> {
    fn nominal(&mut self, model: &B::M) -> Result<f64> {
        self.run(model, None)
    }

    fn adversarial(&mut self, model: &B::M, epsilon: f64) -> Result<f64> {
        self.run(model, Some(epsilon))
    }
}

fn final_eval<B: Backend>(
    backend: &RefCell<B>,
    model: &B::M,
    budgets: &[f64; 3],
    selection: &str,
    outcome: &RunOutcome<B::M>,
) -> Result<FinalEval> {
    let mut b = backend.borrow_mut();
    let (mean, sem) = b.evaluate(model, None, Purpose::Final)?;
    let mut adversarial = Vec::new();
    for eps in budgets {
        let (m, s) = b.evaluate(model, Some(*eps), Purpose::Final)?;
        adversarial.push(BudgetCell {
            epsilon: *eps,
            mean: m,
            sem: s,
        });
    }
    let adv = [adversarial[0].mean, adversarial[1].mean, adversarial[2].mean];
    Ok(FinalEval {
        selection: selection.to_string(),
        nominal: Cell { mean, sem },
        score: model_score(mean, &adv),
        adversarial,
        phases: outcome.records.len(),
        eps_best: outcome.eps_best,
        reached_target: outcome.reached_target,
    })
}

fn save(ctx: &Ctx<'_>, model: &TrainedModel, name: &str, eps_history: Vec<f64>, seed: u64) -> Result<String> {
    fs::create_dir_all(&ctx.ckpt_dir)?;
    let path = ctx.ckpt_dir.join(format!("{name}.bclckpt"));
    let ckpt = model.to_checkpoint(eps_history, vec![seed], Some(ctx.config.env.kind.name().to_string()));
    save_checkpoint(&ckpt, &path)?;
    Ok(path
        .strip_prefix(ctx.ledger.path().parent().unwrap_or(Path::new(".")))
        .unwrap_or(&path)
        .display()
        .to_string())
}

fn run_seed<B: Backend>(ctx: &Ctx<'_>, backend: B, seed: u64) -> Result<Vec<RunSummary>> {
    let config = ctx.config;
    let backend = RefCell::new(backend);
    let started = Instant::now();
    let f0 = backend.borrow_mut().bootstrap(seed)?;
    let (nominal, _) = backend.borrow_mut().evaluate(&f0, None, Purpose::Probe)?;
    let persisted = backend.borrow().persist(&f0);
    let checkpoint = match persisted {
        Some(t) => Some(save(ctx, &t, &format!("bootstrap-s{seed}"), vec![0.0], seed)?),
        None => None,
    };
    ctx.append(
        "bootstrap",
        "bootstrap",
        seed,
        json!({
            "model": format!("{:016x}", f0.fingerprint()),
            "nominal": nominal,
            "checkpoint": checkpoint,
        }),
        Some(started.elapsed().as_secs_f64()),
    )?;
    let budgets = config.report_budgets();
    let mut out = Vec::new();
    for method in config.methods() {
        let name = method.name();
        let mut bcl: BclConfig = config.curriculum.clone();
        bcl.variant = method;
        bcl.base_seed = derive_seed(config.curriculum.base_seed, seed);
        let produced = RefCell::new(HashMap::new());
        let mut trainer = TrainAdapter {
            backend: &backend,
            produced: &produced,
        };
        let mut eval = EvalAdapter {
            backend: &backend,
            ctx,
            method: name,
            seed,
        };
        let mut history: Vec<f64> = Vec::new();
        let mut checkpoints = Vec::new();
        let mut log = |rec: &PhaseRecord| -> Result<()> {
            history.push(rec.eps_hi);
            if let Some(fp) = rec.selected {
                if let Some(m) = produced.borrow().get(&fp) {
                    if let Some(t) = backend.borrow().persist(m) {
                        let file = format!("{name}-s{seed}-p{}", rec.phase);
                        checkpoints.push(save(ctx, &t, &file, history.clone(), seed)?);
                    }
                }
            }
            produced.borrow_mut().clear();
            ctx.append("phase", name, seed, serde_json::to_value(rec)?, Some(rec.wall_clock_secs))
        };
        let outcome = match method {
            Variant::BclRadial => radial_curriculum_run(&f0, &bcl, &mut trainer, &mut eval, &mut log)?,
            Variant::BclRadialAt => radial_plus_at_run(&f0, &bcl, &mut trainer, &mut eval, &mut log)?,
            _ => bcl_run(&f0, &bcl, &mut trainer, &mut eval, &mut log)?,
        };
        let final_ = final_eval(&backend, &outcome.model, &budgets, "final", &outcome)?;
        let best = final_eval(&backend, &outcome.best_along_path, &budgets, "best_along_path", &outcome)?;
        for fe in [&final_, &best] {
            ctx.append("final", name, seed, serde_json::to_value(fe)?, None)?;
        }
        let trained: Vec<f64> = outcome.records.iter().map(|r| r.eps_hi).collect();
        let persisted = {
            let b = backend.borrow();
            (b.persist(&outcome.model), b.persist(&outcome.best_along_path))
        };
        if let (Some(f), Some(b)) = persisted {
            checkpoints.push(save(ctx, &f, &format!("{name}-s{seed}-final"), trained.clone(), seed)?);
            checkpoints.push(save(ctx, &b, &format!("{name}-s{seed}-best"), trained.clone(), seed)?);
        }
        ctx.append(
            "run",
            name,
            seed,
            json!({
                "phases": outcome.records.len(),
                "trained_budgets": trained,
                "eps_best": outcome.eps_best,
                "reached_target": outcome.reached_target,
                "checkpoints": checkpoints,
            }),
            None,
        )?;
        out.push(RunSummary {
            method: name.to_string(),
            seed,
            phases: outcome.records.len(),
            trained_budgets: trained,
            eps_best: outcome.eps_best,
            reached_target: outcome.reached_target,
            final_eval: final_,
            best_eval: best,
            checkpoints,
        });
    }
    Ok(out)
}

fn dqn_backend(config: &ExperimentConfig, hidden: &[usize], dueling: bool, dqn: &DqnTrainerConfig) -> LearnedBackend<Network> {
    let env = config.env.kind;
    let mut sizes = vec![env.obs_dim()];
    sizes.extend_from_slice(hidden);
    sizes.push(env.n_actions());
    let spec = NetworkSpec {
        layer_sizes: sizes,
        dueling,
    };
    let base = dqn.clone();
    LearnedBackend {
        env,
        eval_seed: config.env.seed,
        episodes: config.eval.episodes,
        probe_episodes: config.probe_episodes(),
        suite: config.eval.suite.clone(),
        probe: config.probe_suite().clone(),
        init: Box::new(move |seed| Network::glorot(spec.clone(), seed)),
        step: Box::new(move |init, req, frames| {
            let mut c = base.clone();
            c.loss_mode = req.loss_mode;
            if let Some(f) = frames {
                c.frames = f;
            }
            if req.loss_mode == LossMode::Standard {
                c.kappa = crate::dqn::KappaSchedule::constant(1.0);
            }
            train_dqn_phase(init, env, req.eps_lo, req.eps_hi, &c, req.seed)
        }),
        bootstrap_frames: config.bootstrap_frames,
        wrap: |n| TrainedModel::Dqn(n.clone()),
    }
}

fn ppo_backend(config: &ExperimentConfig, hidden: &[usize], ppo: &PpoConfig) -> LearnedBackend<PpoModel> {
    let env = config.env.kind;
    let hidden = hidden.to_vec();
    let base = ppo.clone();
    LearnedBackend {
        env,
        eval_seed: config.env.seed,
        episodes: config.eval.episodes,
        probe_episodes: config.probe_episodes(),
        suite: config.eval.suite.clone(),
        probe: config.probe_suite().clone(),
        init: Box::new(move |seed| PpoModel::glorot(env, &hidden, seed)),
        step: Box::new(move |init, req, frames| {
            let mut c = base.clone();
            c.loss_mode = req.loss_mode;
            if let Some(f) = frames {
                c.frames = f;
            }
            train_ppo_phase(init, env, req.eps_lo, req.eps_hi, &c, req.seed)
        }),
        bootstrap_frames: config.bootstrap_frames,
        wrap: |m| TrainedModel::Ppo(m.clone()),
    }
}

/// Run every configured method for every seed, writing `runs.jsonl`,
/// checkpoints and the report into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    config.validate()?;
    let ledger = Ledger::open(out_dir)?;
    let ctx = Ctx {
        config,
        ledger: &ledger,
        ckpt_dir: out_dir.join("checkpoints"),
    };
    let mut runs = Vec::new();
    for &seed in &config.seeds {
        let r = match &config.trainer {
            TrainerSettings::Dqn { hidden, dueling, dqn } => {
                run_seed(&ctx, dqn_backend(config, hidden, *dueling, dqn), seed)?
            }
            TrainerSettings::Ppo { hidden, ppo } => run_seed(&ctx, ppo_backend(config, hidden, ppo), seed)?,
            TrainerSettings::Mock {
                reach,
                bootstrap_reach,
            } => run_seed(
                &ctx,
                MockBackend {
                    trainer: MockTrainer::new(*reach, config.curriculum.increment),
                    eval: MockEvaluator::default(),
                    eps0: config.curriculum.eps0,
                    bootstrap_reach: *bootstrap_reach,
                },
                seed,
            )?,
        };
        runs.extend(r);
    }
    super::report::write_report(ledger.path(), out_dir)?;
    Ok(ExperimentSummary {
        name: config.name.clone(),
        out_dir: out_dir.to_path_buf(),
        runs,
    })
}

/// Train one phase from a fresh network (or `init`) and save it.
pub fn train_single_phase(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
    eps_lo: f64,
    eps_hi: f64,
    loss_mode: LossMode,
    init: Option<TrainedModel>,
) -> Result<(TrainedModel, PathBuf)> {
    config.validate()?;
    let ledger = Ledger::open(out_dir)?;
    let started = Instant::now();
    let env = config.env.kind;
    let request = TrainRequest {
        eps_lo,
        eps_hi,
        seed,
        loss_mode,
        phase: 0,
        run: 1,
    };
    let model = match (&config.trainer, init) {
        (TrainerSettings::Dqn { hidden, dueling, dqn }, init) => {
            let mut b = dqn_backend(config, hidden, *dueling, dqn);
            let f = match init {
                Some(TrainedModel::Dqn(n)) => n,
                Some(_) => return Err(crate::BclError::config("trainer.kind", "checkpoint is not a DQN")),
                None => (b.init)(derive_seed(seed, 0xF0))?,
            };
            TrainedModel::Dqn(b.train(&f, &request)?)
        }
        (TrainerSettings::Ppo { hidden, ppo }, init) => {
            let mut b = ppo_backend(config, hidden, ppo);
            let f = match init {
                Some(TrainedModel::Ppo(m)) => m,
                Some(_) => return Err(crate::BclError::config("trainer.kind", "checkpoint is not a PPO model")),
                None => (b.init)(derive_seed(seed, 0xF0))?,
            };
            TrainedModel::Ppo(b.train(&f, &request)?)
        }
        (TrainerSettings::Mock { .. }, _) => {
            return Err(crate::BclError::config(
                "trainer.kind",
                "the mock trainer only runs inside `bcl`",
            ))
        }
    };
    let summary = evaluate(model.scores(), env, &[], config.eval.episodes, config.env.seed, "")?;
    let ctx = Ctx {
        config,
        ledger: &ledger,
        ckpt_dir: out_dir.join("checkpoints"),
    };
    let file = format!("train-s{seed}");
    let rel = save(&ctx, &model, &file, vec![eps_hi], seed)?;
    ctx.append(
        "train",
        loss_mode.name(),
        seed,
        json!({
            "eps_lo": eps_lo,
            "eps_hi": eps_hi,
            "nominal": summary.nominal.mean,
            "checkpoint": rel,
        }),
        Some(started.elapsed().as_secs_f64()),
    )?;
    Ok((model, ctx.ckpt_dir.join(format!("{file}.bclckpt"))))
}
