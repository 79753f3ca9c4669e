//! Experiment front door: configuration, the evaluation protocol, scoring,
//! checkpoints, the run ledger and report generation.

mod checkpoint;
mod config;
mod eval;
mod experiment;
mod ledger;
pub mod mock;
mod report;
mod scoring;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint,
    CheckpointMeta, NetworkEntry, NetworkRole, TrainedModel, FORMAT_VERSION, MAGIC,
};
pub use config::{EnvConfig, EvalConfig, ExperimentConfig, TrainerSettings};
pub use eval::{evaluate, run_episode, EvalReport, EvalSummary, SuiteConfig, MAX_EPISODE_STEPS};
pub use experiment::{run_experiment, train_single_phase, ExperimentSummary, RunSummary};
pub use ledger::{read_ledger, strip_timing, Ledger, LedgerEntry, Timing, LEDGER_FILE};
pub use report::{
    render_csv, render_markdown, write_report, BudgetCell, Cell, FinalEval, REPORT_CSV, REPORT_MD,
};
pub use scoring::{median_of_runs, model_score, phase_eval_score, standard_error};
