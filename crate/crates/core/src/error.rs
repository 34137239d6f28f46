use thiserror::Error;

/// Errors raised by the math core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("{op}: input must be nonempty")]
    Empty { op: &'static str },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTau(f64),

    #[error("rank position must be >= 1, got {0}")]
    BadRankPosition(usize),

    #[error("order is not a permutation of 0..{n}: {order:?}")]
    NotAPermutation { n: usize, order: Vec<usize> },

    #[error("slot 0 (text) must hold order position 1, got order {0:?}")]
    TextNotPinnedFirst(Vec<usize>),

    #[error("invalid fusion mode `{0}`")]
    InvalidMode(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
