use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Core(#[from] semrel_core::CoreError),

    #[error(transparent)]
    Data(#[from] semrel_data::DataError),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(
        "non-finite loss at epoch {epoch}, batch {batch} (lr {lr}); \
         lower the learning rate or check the input features"
    )]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },

    #[error("cannot evaluate an empty split")]
    EmptySplit,

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
}

pub type Result<T> = std::result::Result<T, TrainError>;
