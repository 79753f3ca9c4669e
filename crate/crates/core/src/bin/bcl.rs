use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bcl_core::attacks::{AttackKind, EpsilonBudget};
use bcl_core::curriculum::Variant;
use bcl_core::dqn::LossMode;
use bcl_core::envs::EnvKind;
use bcl_core::harness::{
    evaluate, load_checkpoint, run_experiment, train_single_phase, write_report, ExperimentConfig,
    Ledger, LedgerEntry, Timing, TrainedModel, LEDGER_FILE,
};
use bcl_core::{BclError, Result};

#[derive(Parser)]
#[command(name = "bcl", version, about = "Adversarial curriculum training for small RL agents")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed(s).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the ledger, checkpoints and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single phase and save the result.
    Train(TrainArgs),
    /// Run the full curriculum.
    Bcl(BclArgs),
    /// Run the attack suite against a checkpoint.
    Eval(EvalArgs),
    /// Regenerate report.md and report.csv from the ledger.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "0", value_parser = parse_budget)]
    eps_lo: f64,
    #[arg(long, default_value = "0", value_parser = parse_budget)]
    eps_hi: f64,
    /// standard, at or radial.
    #[arg(long, default_value = "standard", value_parser = parse_loss)]
    loss: LossMode,
    /// Start from this checkpoint instead of a fresh network.
    #[arg(long)]
    init: Option<PathBuf>,
}

#[derive(Args)]
struct BclArgs {
    /// at, ncl, bcl-c, bcl-mos, bcl-radial or bcl-radial-at; may repeat.
    #[arg(long, value_parser = parse_variant)]
    variant: Vec<Variant>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Budgets like 0.05 or 25/255; may repeat. Nominal only when absent.
    #[arg(long, value_parser = parse_budget)]
    epsilon: Vec<f64>,
    /// pgd, rifgsm, rifgsm_multi or rifgsm_multi_t; may repeat.
    #[arg(long, value_parser = parse_attack)]
    attack: Vec<AttackKind>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Needed when the checkpoint does not record its environment and no
    /// config is given.
    #[arg(long)]
    env: Option<EnvKind>,
}

#[derive(Args)]
struct ReportArgs {
    /// Defaults to `<out>/runs.jsonl`.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

fn parse_budget(s: &str) -> std::result::Result<f64, String> {
    EpsilonBudget::parse(s).map(f64::from).map_err(|e| e.to_string())
}

fn parse_loss(s: &str) -> std::result::Result<LossMode, String> {
    match s {
        "standard" => Ok(LossMode::Standard),
        "at" => Ok(LossMode::At),
        "radial" => Ok(LossMode::Radial),
        _ => Err(format!("unknown loss `{s}`")),
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    Variant::parse(s).map_err(|e| e.to_string())
}

fn parse_attack(s: &str) -> std::result::Result<AttackKind, String> {
    AttackKind::parse(s).map_err(|e| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| BclError::config("--config", "this subcommand needs a config file"))?;
    ExperimentConfig::load(path)
}

fn out_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = load_config(cli)?;
    let out = out_dir(cli, Some(&config));
    let init = match &args.init {
        Some(p) => Some(TrainedModel::from_checkpoint(&load_checkpoint(p)?)?),
        None => None,
    };
    let seed = cli.seed.unwrap_or(config.seeds[0]);
    let (_, path) = train_single_phase(&config, &out, seed, args.eps_lo, args.eps_hi, args.loss, init)?;
    println!("{}", path.display());
    Ok(())
}

fn bcl(cli: &Cli, args: &BclArgs) -> Result<()> {
    let mut config = load_config(cli)?;
    if !args.variant.is_empty() {
        config.methods = args.variant.clone();
    }
    if let Some(s) = cli.seed {
        config.seeds = vec![s];
    }
    config.validate()?;
    let out = out_dir(cli, Some(&config));
    let summary = run_experiment(&config, &out)?;
    for r in &summary.runs {
        println!(
            "{} seed {}: {} phases, eps_best {:.4}, target {}, score {:.3}",
            r.method,
            r.seed,
            r.phases,
            r.eps_best,
            if r.reached_target { "reached" } else { "missed" },
            r.final_eval.score
        );
    }
    println!("{}", out.display());
    Ok(())
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let model = TrainedModel::from_checkpoint(&ckpt)?;
    let env = match (args.env, &ckpt.meta.env, &config) {
        (Some(e), _, _) => e,
        (None, Some(name), _) => name.parse()?,
        (None, None, Some(c)) => c.env.kind,
        (None, None, None) => return Err(BclError::config("--env", "environment unknown")),
    };
    let mut suite = config
        .as_ref()
        .map(|c| c.eval.suite.clone())
        .unwrap_or_default();
    if !args.attack.is_empty() {
        suite.attacks = args.attack.clone();
    }
    let episodes = args
        .episodes
        .or(config.as_ref().map(|c| c.eval.episodes))
        .unwrap_or(20);
    let seed = cli
        .seed
        .or(config.as_ref().map(|c| c.env.seed))
        .unwrap_or(0);
    let id = args.checkpoint.display().to_string();
    let out = out_dir(cli, config.as_ref());
    let ledger = Ledger::open(&out)?;
    let budgets = if args.epsilon.is_empty() {
        vec![0.0]
    } else {
        args.epsilon.clone()
    };
    for eps in budgets {
        let specs = if eps > 0.0 { suite.at(eps)? } else { Vec::new() };
        let s = evaluate(model.scores(), env, &specs, episodes, seed, &id)?;
        println!(
            "eps {:.4}: nominal {:.3} ± {:.3}, worst {}",
            eps,
            s.nominal.mean,
            s.nominal.sem,
            s.worst.map_or("n/a".to_string(), |w| format!("{w:.3} ± {:.3}", s.worst_sem.unwrap_or(0.0)))
        );
        ledger.append(&LedgerEntry {
            kind: "eval".to_string(),
            experiment: config.as_ref().map_or("eval".to_string(), |c| c.name.clone()),
            method: "checkpoint".to_string(),
            seed,
            data: json!({"checkpoint": id, "epsilon": eps, "summary": s}),
            timing: Some(Timing::now(None)),
        })?;
    }
    Ok(())
}

fn report(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let out = out_dir(cli, None);
    let ledger = args.ledger.clone().unwrap_or_else(|| out.join(LEDGER_FILE));
    if !Path::new(&ledger).exists() {
        return Err(BclError::config("--ledger", format!("{} not found", ledger.display())));
    }
    write_report(&ledger, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(&cli, a),
        Command::Bcl(a) => bcl(&cli, a),
        Command::Eval(a) => eval(&cli, a),
        Command::Report(a) => report(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bcl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
