use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("digest mismatch for {file}: manifest {expected}, actual {actual}")]
    Digest {
        file: String,
        expected: String,
        actual: String,
    },

    #[error("invalid record {sample_id}: {reason}")]
    Record { sample_id: String, reason: String },

    #[error("split {split} declares {declared} records but file holds {actual}")]
    SplitSize {
        split: String,
        declared: usize,
        actual: usize,
    },

    #[error("rankings missing for samples: {}", .0.join(", "))]
    MissingRankings(Vec<String>),

    #[error("synthesis error: {0}")]
    Synth(String),
}

pub type Result<T> = std::result::Result<T, DataError>;
