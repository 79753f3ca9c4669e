use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::SuiteConfig;
use crate::attacks::budget_serde;
use crate::curriculum::{BclConfig, Variant};
use crate::dqn::DqnTrainerConfig;
use crate::envs::EnvKind;
use crate::error::{BclError, Result};
use crate::ppo::PpoConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    #[serde(default)]
    pub seed: u64,
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

fn yes() -> bool {
    true
}

fn default_reach() -> usize {
    2
}

/// Trainer kind plus its settings, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainerSettings {
    Dqn {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "yes")]
        dueling: bool,
        #[serde(default)]
        dqn: DqnTrainerConfig,
    },
    Ppo {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        ppo: PpoConfig,
    },
    /// Scripted stand-in: a model trained up to `ε` is robust up to
    /// `ε + reach·increment`. Used to check orchestration end to end.
    Mock {
        #[serde(default = "default_reach")]
        reach: usize,
        #[serde(default)]
        bootstrap_reach: usize,
    },
}

impl TrainerSettings {
    pub fn name(&self) -> &'static str {
        match self {
            TrainerSettings::Dqn { .. } => "dqn",
            TrainerSettings::Ppo { .. } => "ppo",
            TrainerSettings::Mock { .. } => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub suite: SuiteConfig,
    /// Attacks used while the curriculum probes robustness; the full suite
    /// when absent.
    pub probe: Option<SuiteConfig>,
    pub probe_episodes: Option<usize>,
    /// Budgets of the final table; the curriculum's score budgets when
    /// absent.
    #[serde(deserialize_with = "budget_serde::opt_three")]
    pub report_budgets: Option<[f64; 3]>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 20,
            suite: SuiteConfig::default(),
            probe: None,
            probe_episodes: None,
            report_budgets: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub env: EnvConfig,
    pub trainer: TrainerSettings,
    #[serde(default)]
    pub curriculum: BclConfig,
    /// Variants to run; the curriculum's own variant when empty.
    #[serde(default)]
    pub methods: Vec<Variant>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Frames of standard training that produce the bootstrap model; the
    /// trainer's phase length when absent.
    #[serde(default)]
    pub bootstrap_frames: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            BclError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| BclError::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn methods(&self) -> Vec<Variant> {
        if self.methods.is_empty() {
            vec![self.curriculum.variant]
        } else {
            self.methods.clone()
        }
    }

    pub fn report_budgets(&self) -> [f64; 3] {
        self.eval.report_budgets.unwrap_or(self.curriculum.score_budgets)
    }

    pub fn probe_suite(&self) -> &SuiteConfig {
        self.eval.probe.as_ref().unwrap_or(&self.eval.suite)
    }

    pub fn probe_episodes(&self) -> usize {
        self.eval.probe_episodes.unwrap_or(self.eval.episodes)
    }

    pub fn validate(&self) -> Result<()> {
        self.curriculum.validate()?;
        if self.seeds.is_empty() {
            return Err(BclError::config("seeds", "at least one seed is required"));
        }
        if self.eval.episodes == 0 || self.eval.probe_episodes == Some(0) {
            return Err(BclError::config("eval.episodes", "episodes must be >= 1"));
        }
        for (name, suite) in [("eval.suite", Some(&self.eval.suite)), ("eval.probe", self.eval.probe.as_ref())] {
            if let Some(s) = suite {
                s.at(self.curriculum.target)
                    .map_err(|e| BclError::config(name, e.to_string()))?;
            }
        }
        for b in self.report_budgets() {
            if !(0.0..1.0).contains(&b) {
                return Err(BclError::config("eval.report_budgets", "budgets must lie in [0, 1)"));
            }
        }
        match &self.trainer {
            TrainerSettings::Dqn { dqn, hidden, .. } => {
                dqn.validate()?;
                check_hidden(hidden)?;
            }
            TrainerSettings::Ppo { ppo, hidden } => {
                ppo.validate()?;
                check_hidden(hidden)?;
                if self
                    .methods()
                    .iter()
                    .any(|v| matches!(v, Variant::BclRadial | Variant::BclRadialAt))
                {
                    return Err(BclError::config(
                        "methods",
                        "RADIAL variants need the dqn trainer",
                    ));
                }
            }
            TrainerSettings::Mock { .. } => {}
        }
        Ok(())
    }
}

fn check_hidden(hidden: &[usize]) -> Result<()> {
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(BclError::config(
            "trainer.hidden",
            "need at least one hidden layer, all widths > 0",
        ));
    }
    Ok(())
}
