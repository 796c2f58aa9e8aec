use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no usable rows left after cleaning ({dropped} dropped)")]
    EmptyAfterCleaning { dropped: usize },
    #[error("frame is empty")]
    EmptyFrame,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("series too short: need {needed} observations, have {actual}")]
    SeriesTooShort { needed: usize, actual: usize },
    #[error("zero variance in training data")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("every actual value is zero; MAPE is undefined")]
    AllTermsSkipped,
    #[error("no reports to tabulate")]
    EmptyReportList,
    #[error("lag {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("Durbin-Levinson recursion is singular at lag {0}")]
    SingularRecursion(usize),
    #[error("window {window} larger than series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("division by zero at index {0}")]
    DivisionByZero(usize),
    #[error("non-positive value at index {0}")]
    NonPositive(usize),
    #[error("component count {count} exceeds the {available} available frequencies")]
    CountExceedsSpectrum { count: usize, available: usize },
    #[error("need at least two columns with non-zero variance, have {0}")]
    TooFewColumns(usize),
    #[error("period {period} too large for series of length {len}")]
    PeriodTooLarge { period: usize, len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("no training windows")]
    EmptyWindows,
    #[error("training diverged at epoch {0}")]
    DivergedLoss(usize),
    #[error("model has not been fitted")]
    NotFitted,
    #[error("pool size must be at least 1, got {0}")]
    InvalidPoolSize(usize),
    #[error("{coeffs} coefficients cannot be interpolated onto {horizon} points")]
    TooManyCoeffs { coeffs: usize, horizon: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("optimizer failed: {0}")]
    OptimizerFailed(String),
    #[error("multiplicative seasonality requires strictly positive data")]
    NonPositiveData,
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("benchmark result is empty")]
    EmptyResult,
    #[error("{model}: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
