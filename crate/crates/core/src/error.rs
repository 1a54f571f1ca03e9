//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while loading or validating a [`crate::ScenarioConfig`].
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config key `{key}`: cannot parse `{value}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by the analytic precoders.
#[derive(Debug, Error)]
pub enum PrecoderError {
    /// The regularized Gram matrix could not be factorized. With a positive
    /// noise power this only happens for non-finite channel entries.
    #[error("singular system: {0}")]
    SingularSystem(String),
    /// Power normalization of an all-zero precoder is undefined.
    #[error("cannot normalize a zero precoding matrix")]
    NormalizationOfZero,
    /// The iterative eigensolver did not converge within its budget.
    #[error("eigensolver failed to converge: {0}")]
    EigenFailure(String),
}

/// Errors raised by the neural-network engine.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("input has {got} columns, network expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    /// Batch statistics are undefined for fewer than two samples.
    #[error("training-mode forward needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),
    /// `backward` was called without a matching training-mode `forward`.
    #[error("backward called without a cached forward pass")]
    CallOrder,
    /// A gradient contained NaN or Inf; the parameter update was aborted.
    #[error("non-finite gradient at flat index {index} (value {value})")]
    NonFiniteGradient { index: usize, value: f64 },
}

/// Errors raised by the soft actor-critic learner.
#[derive(Debug, Error)]
pub enum SacError {
    #[error("standardization statistics not calibrated")]
    NotCalibrated,
    #[error("action vector has zero norm; cannot project onto the power sphere")]
    ZeroAction,
    #[error("expected action/state length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Errors raised while reading or writing checkpoints.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes; not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated checkpoint: wanted {wanted} more bytes at offset {offset}")]
    Truncated { offset: usize, wanted: usize },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("embedded config: {0}")]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
