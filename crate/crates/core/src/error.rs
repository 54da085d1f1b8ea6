use thiserror::Error;

/// Errors surfaced by the library. Contract violations (dimension mismatches,
/// invalid schedule parameters) are errors rather than panics so the CLI can
/// map them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input in {0}")]
    NonFinite(String),

    #[error("hull oracle unavailable for `{0}`; only a subgradient selection is exposed")]
    HullUnavailable(String),

    #[error("no proximal closed form implemented for constraint `{set}` with regularizer `{reg}`")]
    UnsupportedProx { set: String, reg: String },

    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),

    #[error("initial point is infeasible for the constraint set")]
    InfeasibleStart,

    #[error("run log is empty")]
    EmptyLog,

    #[error("insufficient tail records: have {have}, need at least {need}")]
    InsufficientRecords { have: usize, need: usize },

    #[error("window [{start}, {end}] exceeds the logged horizon {horizon}")]
    WindowExceedsHorizon { start: f64, end: f64, horizon: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid campaign: {0}")]
    InvalidCampaign(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
