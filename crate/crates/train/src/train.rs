//! Seeded training loop with dev-set model selection.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use semrel_core::ndcg::{RankingTarget, SinkhornConfig};
use semrel_core::srr::{ClassicMode, SemanticBundle, SrrDims, SrrOptions, SrrSample};
use semrel_core::Vector64;
use semrel_data::{load, synthesize, FeatureRecord};

use crate::config::{DatasetSource, DropRelation, RunConfig};
use crate::error::{Result, TrainError};
use crate::kendall::kendall_tau;
use crate::metrics::{confusion_matrix, metrics_from_confusion, MetricsReport};
use crate::model::{Model, ModelKind};
use crate::optim::{adamw_step, AdamWConfig, AdamWState};

/// Dataset converted into training samples.
#[derive(Debug, Clone)]
pub struct LoadedSplits {
    pub slots: Vec<String>,
    pub d: usize,
    pub k: usize,
    pub train: Vec<SrrSample<f64>>,
    pub dev: Vec<SrrSample<f64>>,
    pub test: Vec<SrrSample<f64>>,
}

fn to_sample(record: &FeatureRecord, slots: &[String]) -> Result<SrrSample<f64>> {
    let text = Vector64::new(record.text.clone())?;
    let fine: Vec<Vector64> = slots
        .iter()
        .map(|slot| Vector64::new(record.fine[slot].clone()))
        .collect::<std::result::Result<_, _>>()?;
    let bundle = SemanticBundle::new(text, fine)?;

    // stored rankings cover the fine slots; the text slot's top rank is
    // implicit and prepended here
    let target = match &record.ranking {
        None => None,
        Some(ranking) => {
            let mut order = vec![0usize];
            for name in ranking {
                let idx = slots.iter().position(|s| s == name).ok_or_else(|| {
                    TrainError::Config(format!(
                        "sample {}: ranked slot {name} not in slot set",
                        record.sample_id
                    ))
                })?;
                order.push(1 + idx);
            }
            Some(RankingTarget::new(order)?)
        }
    };
    Ok(SrrSample {
        bundle,
        label: record.label,
        target,
    })
}

/// Loads or synthesizes the dataset named by the config and validates
/// the declared dims against it.
pub fn prepare(config: &RunConfig) -> Result<LoadedSplits> {
    let (slots, d, k, train, dev, test) = match &config.dataset {
        DatasetSource::Manifest(path) => {
            let ds = load(path)?;
            (
                ds.manifest.slots.clone(),
                ds.manifest.d,
                ds.manifest.k,
                ds.train,
                ds.dev,
                ds.test,
            )
        }
        DatasetSource::Synth(spec) => {
            let splits = synthesize(spec)?;
            (
                spec.slots.clone(),
                spec.d,
                spec.k,
                splits.train,
                splits.dev,
                splits.test,
            )
        }
    };
    if let Some(expect) = config.d {
        if expect != d {
            return Err(TrainError::Config(format!(
                "config d={expect} but dataset d={d}"
            )));
        }
    }
    if let Some(expect) = config.k {
        if expect != k {
            return Err(TrainError::Config(format!(
                "config K={expect} but dataset K={k}"
            )));
        }
    }
    let convert = |records: Vec<FeatureRecord>| -> Result<Vec<SrrSample<f64>>> {
        records.iter().map(|r| to_sample(r, &slots)).collect()
    };
    Ok(LoadedSplits {
        d,
        k,
        train: convert(train)?,
        dev: convert(dev)?,
        test: convert(test)?,
        slots,
    })
}

fn model_kind(config: &RunConfig) -> ModelKind {
    if let Some(mode) = config.classic_mode {
        return ModelKind::Classic(mode);
    }
    if config.no_srr {
        // plain summation fusion
        return ModelKind::Classic(ClassicMode::Or);
    }
    let opts = SrrOptions {
        drop_importance: config.drop_relation == Some(DropRelation::Importance),
        drop_complementarity: config.drop_relation == Some(DropRelation::Complementarity),
        drop_inconsistency: config.drop_relation == Some(DropRelation::Inconsistency),
    };
    ModelKind::Srr { opts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub classification: f64,
    pub ranking: f64,
    pub dev_acc: f64,
    pub dev_wf1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub best_epoch: usize,
    pub curve: Vec<EpochLog>,
    pub dev: MetricsReport,
    pub test: MetricsReport,
    pub rank_agreement_test: Option<f64>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub report: RunReport,
}

/// Metrics over a prepared split.
pub fn evaluate(model: &Model, samples: &[SrrSample<f64>], k: usize) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let mut truths = Vec::with_capacity(samples.len());
    let mut preds = Vec::with_capacity(samples.len());
    for s in samples {
        truths.push(s.label);
        preds.push(model.predict(&s.bundle)?);
    }
    metrics_from_confusion(confusion_matrix(&truths, &preds, k))
}

/// Mean Kendall tau between the learned importance ordering and the
/// stored target (text slot pinned first in the target). `None` when
/// the model has no importance weights or no sample carries a target.
pub fn rank_agreement(model: &Model, samples: &[SrrSample<f64>]) -> Result<Option<f64>> {
    let mut taus = Vec::new();
    for s in samples {
        let Some(target) = &s.target else { continue };
        let Some(alpha) = model.alpha(&s.bundle)? else {
            return Ok(None);
        };
        let relevance = target.relevance();
        taus.push(kendall_tau(&alpha, relevance));
    }
    if taus.is_empty() {
        return Ok(None);
    }
    Ok(Some(taus.iter().sum::<f64>() / taus.len() as f64))
}

/// Trains one seed to completion and returns the best-dev-WF1 model.
pub fn train(config: &RunConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let start = Instant::now();
    let data = prepare(config)?;
    let m = data.slots.len();
    let mut dims = SrrDims::new(data.d, data.k, m);
    if let Some(h) = config.h {
        dims = dims.with_hidden(h);
    }

    let kind = model_kind(config);
    let mut model = Model::init(kind, dims, seed);
    let lambda = if config.no_rank_loss { 0.0 } else { config.lambda };
    let sinkhorn = SinkhornConfig {
        max_iters: config.sinkhorn_iters,
        tol: config.sinkhorn_tol,
    };
    let optim_cfg = AdamWConfig {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..AdamWConfig::new(config.lr)
    };
    let mut optim = AdamWState::new(model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut curve = Vec::with_capacity(config.epochs);
    let mut best_wf1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut best_flat = model.flatten();

    let mut indices: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_cls = 0.0;
        let mut epoch_rank = 0.0;
        let mut batches = 0usize;

        for (batch_id, chunk) in indices.chunks(config.batch_size).enumerate() {
            let batch: Vec<&SrrSample<f64>> = chunk.iter().map(|&i| &data.train[i]).collect();
            let loss = model.batch_loss(&batch, lambda, config.tau, sinkhorn)?;
            if !loss.total.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: batch_id,
                    lr: config.lr,
                });
            }
            let mut flat = model.flatten();
            adamw_step(&mut flat, &loss.grads, &mut optim, &optim_cfg);
            model.assign_flat(&flat);

            epoch_loss += loss.total;
            epoch_cls += loss.classification;
            epoch_rank += loss.ranking;
            batches += 1;
        }

        let dev = evaluate(&model, &data.dev, data.k)?;
        if dev.wf1 > best_wf1 {
            best_wf1 = dev.wf1;
            best_epoch = epoch;
            best_flat = model.flatten();
        }
        let log_entry = EpochLog {
            epoch,
            train_loss: epoch_loss / batches as f64,
            classification: epoch_cls / batches as f64,
            ranking: epoch_rank / batches as f64,
            dev_acc: dev.acc,
            dev_wf1: dev.wf1,
        };
        log::debug!(
            "seed {seed} epoch {epoch}: loss {:.4} dev acc {:.2} wf1 {:.2}",
            log_entry.train_loss,
            log_entry.dev_acc,
            log_entry.dev_wf1
        );
        curve.push(log_entry);
    }

    model.assign_flat(&best_flat);
    let dev = evaluate(&model, &data.dev, data.k)?;
    let test = evaluate(&model, &data.test, data.k)?;
    let rank_agreement_test = rank_agreement(&model, &data.test)?;
    Ok(TrainOutcome {
        model,
        report: RunReport {
            seed,
            best_epoch,
            curve,
            dev,
            test,
            rank_agreement_test,
            wall_ms: start.elapsed().as_millis(),
        },
    })
}

/// Scalar metrics averaged across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedMetrics {
    pub acc: f64,
    pub f1_macro: f64,
    pub p_macro: f64,
    pub r_macro: f64,
    pub wf1: f64,
    pub wp: f64,
    pub rank_agreement: Option<f64>,
}

impl AveragedMetrics {
    fn from_runs(runs: &[RunReport]) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&MetricsReport) -> f64| -> f64 {
            runs.iter().map(|r| f(&r.test)).sum::<f64>() / n
        };
        let taus: Vec<f64> = runs.iter().filter_map(|r| r.rank_agreement_test).collect();
        Self {
            acc: mean(|m| m.acc),
            f1_macro: mean(|m| m.f1_macro),
            p_macro: mean(|m| m.p_macro),
            r_macro: mean(|m| m.r_macro),
            wf1: mean(|m| m.wf1),
            wp: mean(|m| m.wp),
            rank_agreement: if taus.is_empty() {
                None
            } else {
                Some(taus.iter().sum::<f64>() / taus.len() as f64)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub runs: Vec<RunReport>,
    pub mean_test: AveragedMetrics,
}

/// Trains every seed in the config and averages the test metrics.
pub fn train_multi(config: &RunConfig) -> Result<(Vec<Model>, MultiSeedReport)> {
    let mut models = Vec::with_capacity(config.seeds.len());
    let mut runs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let outcome = train(config, seed)?;
        models.push(outcome.model);
        runs.push(outcome.report);
    }
    let mean_test = AveragedMetrics::from_runs(&runs);
    Ok((models, MultiSeedReport { runs, mean_test }))
}

/// One ablation row: a named variant with its averaged metrics and the
/// deltas against the full head (variant minus full).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub mean_test: AveragedMetrics,
    pub delta_acc: f64,
    pub delta_f1: f64,
    pub delta_wf1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub full: AveragedMetrics,
    pub rows: Vec<AblationRow>,
}

/// Trains the full head plus each single-relation ablation and reports
/// comparative deltas.
pub fn run_ablations(config: &RunConfig) -> Result<AblationReport> {
    let mut base = config.clone();
    base.drop_relation = None;
    let (_, full) = train_multi(&base)?;

    let mut rows = Vec::new();
    for (name, drop) in [
        ("drop_importance", DropRelation::Importance),
        ("drop_complementarity", DropRelation::Complementarity),
        ("drop_inconsistency", DropRelation::Inconsistency),
    ] {
        let mut variant = base.clone();
        variant.drop_relation = Some(drop);
        let (_, report) = train_multi(&variant)?;
        rows.push(AblationRow {
            name: name.to_string(),
            delta_acc: report.mean_test.acc - full.mean_test.acc,
            delta_f1: report.mean_test.f1_macro - full.mean_test.f1_macro,
            delta_wf1: report.mean_test.wf1 - full.mean_test.wf1,
            mean_test: report.mean_test,
        });
    }
    Ok(AblationReport {
        full: full.mean_test,
        rows,
    })
}
