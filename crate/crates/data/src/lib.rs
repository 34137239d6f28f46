//! On-disk dataset formats and desk-scale synthetic data.
//!
//! A dataset is a JSON manifest plus one JSON-lines file per split.
//! Every record carries a pooled text feature, one pooled feature per
//! fine semantic slot, a class label, and (optionally) a slot ranking.
//! Rankings are stored over the fine slots only; the text slot's top
//! rank is implicit and prepended by consumers.
//!
//! [`synthesize`] replaces full-scale encoder features with planted
//! class/ranking structure so training behavior is checkable in
//! seconds.

pub mod error;
pub mod manifest;
pub mod record;
pub mod stats;
pub mod synth;

pub use error::DataError;
pub use manifest::{load, write_dataset, Dataset, DatasetManifest, SplitFiles, SplitSizes};
pub use record::FeatureRecord;
pub use stats::RankStats;
pub use synth::{synthesize, SynthSpec, SynthSplits};
