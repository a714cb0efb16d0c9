use thiserror::Error;

use crate::solver::Trajectory;
use crate::synthesis::ControlSchedule;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field is not mean-zero (|mean| = {mean:e})")]
    NotMeanZero { mean: f64 },

    #[error("Sobolev index {0} outside [0, 1]")]
    InvalidSobolevIndex(f64),

    #[error("non-finite value detected at t = {time}")]
    NonFinite {
        time: f64,
        /// States computed before the blow-up, kept for post-mortem.
        partial: Option<Box<Trajectory>>,
    },

    #[error("forcing covers {available} but {requested} was requested")]
    DurationMismatch { available: f64, requested: f64 },

    #[error("invalid forcing: {0}")]
    InvalidForcing(String),

    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),

    #[error("product mode {mode} exceeds cutoff {cutoff}")]
    CutoffOverflow { mode: usize, cutoff: usize },

    #[error("target not in span (residual {residual:e})")]
    NotInSpan { residual: f64 },

    #[error("error budget exhausted: {reason}")]
    BudgetExhausted {
        reason: String,
        partial: Option<Box<ControlSchedule>>,
    },

    #[error("recursion depth {depth} exceeds ladder height {height}")]
    RecursionLimit { depth: usize, height: usize },

    #[error("invalid noise model: {0}")]
    InvalidModel(String),

    #[error("parse error: {message}")]
    Parse {
        message: String,
        /// Index of the offending schedule segment, when known.
        segment: Option<usize>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::GridMismatch => "GridMismatch",
            Error::NotMeanZero { .. } => "NotMeanZero",
            Error::InvalidSobolevIndex(_) => "InvalidSobolevIndex",
            Error::NonFinite { .. } => "NonFinite",
            Error::DurationMismatch { .. } => "DurationMismatch",
            Error::InvalidForcing(_) => "InvalidForcing",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::CutoffOverflow { .. } => "CutoffOverflow",
            Error::NotInSpan { .. } => "NotInSpan",
            Error::BudgetExhausted { .. } => "BudgetExhausted",
            Error::RecursionLimit { .. } => "RecursionLimit",
            Error::InvalidModel(_) => "InvalidModel",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
