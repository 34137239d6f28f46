//! Run configuration (JSON).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use semrel_core::srr::ClassicMode;
use semrel_data::SynthSpec;

use crate::error::{Result, TrainError};

/// Where the feature records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Path to a dataset manifest.
    Manifest(PathBuf),
    /// Generate planted data in memory.
    Synth(SynthSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropRelation {
    Importance,
    Complementarity,
    Inconsistency,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_tau() -> f64 {
    1.0
}
fn default_sinkhorn_iters() -> usize {
    30
}
fn default_sinkhorn_tol() -> f64 {
    1e-6
}
fn default_lr() -> f64 {
    1e-3
}
fn default_weight_decay() -> f64 {
    0.01
}
fn default_batch_size() -> usize {
    32
}
fn default_epochs() -> usize {
    100
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// Hyperparameters, toggles, and paths for a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSource,

    /// Expected feature dimension; validated against the dataset when
    /// present.
    #[serde(default)]
    pub d: Option<usize>,
    /// Expected class count; validated against the dataset when
    /// present.
    #[serde(default, rename = "K")]
    pub k: Option<usize>,
    /// Hidden width of the weight network; defaults to `d / 2`.
    #[serde(default)]
    pub h: Option<usize>,

    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_sinkhorn_iters")]
    pub sinkhorn_iters: usize,
    #[serde(default = "default_sinkhorn_tol")]
    pub sinkhorn_tol: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,

    /// Drop the ranking term from the objective.
    #[serde(default)]
    pub no_rank_loss: bool,
    /// Replace the relational head with plain summation fusion.
    #[serde(default)]
    pub no_srr: bool,
    /// Train a classic-relation baseline instead of the full head.
    #[serde(default)]
    pub classic_mode: Option<ClassicMode>,
    /// Ablate one relation inside the full head.
    #[serde(default)]
    pub drop_relation: Option<DropRelation>,

    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            d: None,
            k: None,
            h: None,
            lambda: default_lambda(),
            tau: default_tau(),
            sinkhorn_iters: default_sinkhorn_iters(),
            sinkhorn_tol: default_sinkhorn_tol(),
            lr: default_lr(),
            weight_decay: default_weight_decay(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            seeds: default_seeds(),
            no_rank_loss: false,
            no_srr: false,
            classic_mode: None,
            drop_relation: None,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda >= 0.0),
            ("tau", self.tau > 0.0),
            ("lr", self.lr > 0.0),
            ("weight_decay", self.weight_decay >= 0.0),
            ("sinkhorn_tol", self.sinkhorn_tol >= 0.0),
        ];
        for (name, ok) in positive {
            if !ok {
                return Err(TrainError::Config(format!("{name} out of range")));
            }
        }
        if self.batch_size == 0 || self.epochs == 0 || self.sinkhorn_iters == 0 {
            return Err(TrainError::Config(
                "batch_size, epochs, and sinkhorn_iters must be positive".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(TrainError::Config("seeds must be nonempty".into()));
        }
        if self.no_srr && self.classic_mode.is_some() {
            return Err(TrainError::Config(
                "no_srr and classic_mode are mutually exclusive".into(),
            ));
        }
        if self.drop_relation.is_some() && (self.no_srr || self.classic_mode.is_some()) {
            return Err(TrainError::Config(
                "drop_relation applies only to the full head".into(),
            ));
        }
        Ok(())
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: Self = serde_json::from_slice(&bytes).map_err(|source| TrainError::Json {
            path: path.display().to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }
}
