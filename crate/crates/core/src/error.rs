use thiserror::Error;

/// Failures raised by field evaluation, integration and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("magnetic null: |B| = {b_mag:e} below {threshold:e} at {position:?}")]
    FieldNull { b_mag: f64, threshold: f64, position: [f64; 3] },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("inconsistent field model {model}: residual {residual:e} exceeds {limit:e}")]
    InconsistentModel { model: &'static str, residual: f64, limit: f64 },

    #[error("guiding-center fixed point not reached after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("constraint residual {residual:e} exceeds {limit:e} at t = {time}")]
    ResidualBlowup { time: f64, residual: f64, limit: f64 },

    #[error("gyro-average window has {samples_per_period:.1} samples per gyroperiod, need at least {required}")]
    WindowTooCoarse { samples_per_period: f64, required: usize },

    #[error("initial magnetic moment {mu:e} too small for a relative drift")]
    ZeroMu { mu: f64 },

    #[error("log-log fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
