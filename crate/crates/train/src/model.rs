//! Model wrapper dispatching between the relational head and the
//! classic fusion baselines, with flat parameter views for the
//! optimizer and JSON checkpointing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use semrel_core::ndcg::SinkhornConfig;
use semrel_core::ops::diff;
use semrel_core::srr::{
    classic_fuse, diff_classic_fuse, diff_srr_loss, srr_forward, ClassicMode, ClassicParams,
    SemanticBundle, SrrDims, SrrLossConfig, SrrOptions, SrrParams, SrrSample,
};
use semrel_core::{Tape64, Vector64};

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Srr { opts: SrrOptions },
    Classic(ClassicMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    Srr(SrrParams<f64>),
    Classic(ClassicParams<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub dims: SrrDims,
    pub params: ModelParams,
}

/// Batch objective values plus parameter gradients in flatten order.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub total: f64,
    pub classification: f64,
    pub ranking: f64,
    pub grads: Vec<f64>,
}

impl Model {
    pub fn init(kind: ModelKind, dims: SrrDims, seed: u64) -> Self {
        let params = match kind {
            ModelKind::Srr { .. } => ModelParams::Srr(SrrParams::init(dims, seed)),
            ModelKind::Classic(mode) => ModelParams::Classic(ClassicParams::init(mode, dims, seed)),
        };
        Self { kind, dims, params }
    }

    pub fn param_count(&self) -> usize {
        match &self.params {
            ModelParams::Srr(p) => p.param_count(),
            ModelParams::Classic(p) => p.param_count(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        match &self.params {
            ModelParams::Srr(p) => p.flatten(),
            ModelParams::Classic(p) => p.flatten(),
        }
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        match &mut self.params {
            ModelParams::Srr(p) => p.assign_flat(flat),
            ModelParams::Classic(p) => p.assign_flat(flat),
        }
    }

    /// Mean objective over the batch with gradients for every
    /// parameter.
    pub fn batch_loss(
        &self,
        batch: &[&SrrSample<f64>],
        lambda: f64,
        tau: f64,
        sinkhorn: SinkhornConfig<f64>,
    ) -> Result<BatchLoss> {
        assert!(!batch.is_empty(), "batch_loss: empty batch");
        match (&self.params, self.kind) {
            (ModelParams::Srr(params), ModelKind::Srr { opts }) => {
                let cfg = SrrLossConfig {
                    lambda,
                    tau,
                    sinkhorn,
                    opts,
                };
                let mut tape = Tape64::new();
                let pv = params.leaves(&mut tape);
                let recorded: Vec<_> = batch
                    .iter()
                    .map(|s| (s.bundle.leaves(&mut tape), s.label, s.target.as_ref()))
                    .collect();
                let loss = diff_srr_loss(&mut tape, &recorded, &pv, &cfg);
                tape.backward(loss.total);
                Ok(BatchLoss {
                    total: tape.value(loss.total),
                    classification: tape.value(loss.classification),
                    ranking: tape.value(loss.ranking),
                    grads: tape.grads(&pv.all_vars()),
                })
            }
            (ModelParams::Classic(params), ModelKind::Classic(mode)) => {
                let mut tape = Tape64::new();
                let pv = params.leaves(&mut tape);
                let mut ce_terms = Vec::with_capacity(batch.len());
                for s in batch {
                    let bv = s.bundle.leaves(&mut tape);
                    let logits = diff_classic_fuse(&mut tape, &bv, &pv, mode);
                    ce_terms.push(diff::cross_entropy(&mut tape, &logits, s.label));
                }
                let sum = tape.sum(&ce_terms);
                let total = tape.mul_c(sum, 1.0 / ce_terms.len() as f64);
                tape.backward(total);
                Ok(BatchLoss {
                    total: tape.value(total),
                    classification: tape.value(total),
                    ranking: 0.0,
                    grads: tape.grads(&pv.all_vars()),
                })
            }
            _ => Err(TrainError::Config(
                "model kind and parameters disagree".into(),
            )),
        }
    }

    pub fn logits(&self, bundle: &SemanticBundle<f64>) -> Result<Vector64> {
        match (&self.params, self.kind) {
            (ModelParams::Srr(params), ModelKind::Srr { opts }) => {
                Ok(srr_forward(bundle, params, opts)?.logits)
            }
            (ModelParams::Classic(params), ModelKind::Classic(mode)) => {
                Ok(classic_fuse(bundle, mode, params)?)
            }
            _ => Err(TrainError::Config(
                "model kind and parameters disagree".into(),
            )),
        }
    }

    /// Argmax class (lowest index wins ties).
    pub fn predict(&self, bundle: &SemanticBundle<f64>) -> Result<usize> {
        let logits = self.logits(bundle)?;
        let mut best = 0;
        for i in 1..logits.dim() {
            if logits[i] > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Importance weights, when the model has them.
    pub fn alpha(&self, bundle: &SemanticBundle<f64>) -> Result<Option<Vec<f64>>> {
        match (&self.params, self.kind) {
            (ModelParams::Srr(params), ModelKind::Srr { opts }) => {
                let out = srr_forward(bundle, params, opts)?;
                Ok(out.alpha.map(|a| a.into_vec()))
            }
            _ => Ok(None),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).map_err(|source| TrainError::Json {
            path: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, json).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| TrainError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|source| TrainError::Json {
            path: path.display().to_string(),
            source,
        })
    }
}
