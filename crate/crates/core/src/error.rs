use thiserror::Error;

/// Errors raised by model construction, simulation and analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdmpError {
    #[error("environment index {k} out of range (model has {n0} environments)")]
    EnvOutOfRange { k: usize, n0: usize },

    #[error("state component {index} is negative ({value})")]
    NegativeState { index: usize, value: f64 },

    #[error("state has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("switch rate {rate} out of row {k} exceeds the declared bound {bound} at t = {t}")]
    RateBoundViolated { k: usize, rate: f64, bound: f64, t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e}, env {k}, x = {x:?})")]
    StepUnderflow { t: f64, h: f64, k: usize, x: Vec<f64> },

    #[error("rate matrix is reducible")]
    Reducible,

    #[error("no interior invariant measure: {0}")]
    NoInteriorMeasure(String),

    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),

    #[error("interaction submatrix is singular")]
    SingularInteraction,

    #[error("subsystem mean infeasible: {0}")]
    InfeasibleMeans(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, PdmpError>;
