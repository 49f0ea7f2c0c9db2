use thiserror::Error;

/// Errors produced by the solver and its audits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("fields live on different bases: {0}")]
    BasisMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("quadrature insufficient: {0}")]
    Quadrature(String),

    #[error("time {t} outside recorded horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("stability guard violated: {0}")]
    StabilityGuard(String),

    #[error("numerical blow-up at step {step} (t = {t}): l2 norm = {l2}")]
    Blowup { step: usize, t: f64, l2: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
