//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. The [`Error::category`] split
//! exists so front ends can map failures onto stable exit codes without
//! matching on individual variants.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// File system, serialization, or configuration problems (exit 2).
    IoOrConfig,
    /// Numerical or degenerate-input failures (exit 3).
    Numerical,
    /// Violations of a data contract between inputs (exit 4).
    DataContract,
}

#[derive(Debug, Error)]
pub enum Error {
    // --- I/O and file formats ---------------------------------------------
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("checksum mismatch in {path}: manifest {expected:#010x}, payload {actual:#010x}")]
    ChecksumMismatch {
        path: String,
        expected: u32,
        actual: u32,
    },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    // --- epoching ----------------------------------------------------------
    #[error("window [{start_ms}, {end_ms}] ms out of bounds for event at sample {sample_index}")]
    WindowOutOfBounds {
        sample_index: usize,
        start_ms: f64,
        end_ms: f64,
    },

    // --- preprocessing -----------------------------------------------------
    #[error("common average reference undefined for a single channel")]
    SingleChannel,
    #[error("unstable filter design: {0}")]
    UnstableDesign(String),
    #[error("downsample factor {input_hz}/{target_hz} Hz is not an integer")]
    NonIntegerFactor { input_hz: f64, target_hz: f64 },
    #[error("all {total} epochs rejected at {threshold_uv} uV peak-to-peak; threshold too low or data corrupt")]
    AllRejected { total: usize, threshold_uv: f64 },

    // --- beamformer --------------------------------------------------------
    #[error("empty {0} group: covariance pooling needs at least one epoch per condition")]
    EmptyGroup(&'static str),
    #[error("time {t_ms} ms falls outside the epoch (valid samples 0..{len})")]
    TimeOutOfEpoch { t_ms: f64, len: usize },
    #[error("degenerate difference pattern (norm {norm:.3e}): no separation between targets and standards")]
    DegeneratePattern { norm: f64 },
    #[error("covariance matrix is singular even after ridge regularization")]
    SingularCovariance,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    // --- scoring -----------------------------------------------------------
    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),

    // --- metrics -----------------------------------------------------------
    #[error("row {row} puts probability mass on class {class} whose marginal is zero")]
    ZeroMarginalWithMass { row: usize, class: usize },
    #[error("kernel bandwidth must be positive, got {0}")]
    BandwidthNonPositive(f64),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    // --- statistics --------------------------------------------------------
    #[error("no trials observed for category {0}")]
    EmptyCategory(String),
    #[error("zero variance in {0}: correlation undefined")]
    ZeroVariance(&'static str),
    #[error("score tables do not share a participant x category grid: {0}")]
    GridMismatch(String),
    #[error("degenerate ANOVA groups: {0}")]
    DegenerateGroups(String),
}

impl Error {
    /// Classify this error for exit-code mapping.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            Io(_) | Json(_) | Csv(_) | Format { .. } | ChecksumMismatch { .. }
            | InvalidSpec(_) | InvalidConfig(_) => ErrorCategory::IoOrConfig,
            UnstableDesign(_) | DegeneratePattern { .. } | SingularCovariance
            | AllRejected { .. } | ZeroVariance(_) | NotPsd(_) => ErrorCategory::Numerical,
            WindowOutOfBounds { .. } | SingleChannel | NonIntegerFactor { .. }
            | EmptyGroup(_) | TimeOutOfEpoch { .. } | ShapeMismatch(_)
            | InsufficientTrials(_) | ZeroMarginalWithMass { .. }
            | BandwidthNonPositive(_) | TooFewSamples(_) | DimensionMismatch(_)
            | EmptyCategory(_) | GridMismatch(_) | DegenerateGroups(_) => {
                ErrorCategory::DataContract
            }
        }
    }
}
