//! Optimization loop, metrics, ablations, and reporting.

pub mod config;
pub mod error;
pub mod kendall;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod report;
pub mod train;

pub use config::{DatasetSource, DropRelation, RunConfig};
pub use error::TrainError;
pub use kendall::kendall_tau;
pub use metrics::{confusion_matrix, metrics_from_confusion, MetricsReport};
pub use model::{Model, ModelKind, ModelParams};
pub use optim::{adamw_step, AdamWConfig, AdamWState};
pub use train::{
    evaluate, rank_agreement, run_ablations, train, train_multi, AblationReport, MultiSeedReport,
    RunReport, TrainOutcome,
};
