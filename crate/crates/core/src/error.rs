use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("value {value} outside the admissible range {range}")]
    Range { value: f64, range: String },

    #[error("evaluation of {what} at s = {at} is not finite")]
    EvaluationDomain { what: String, at: f64 },

    #[error("{what} saturates at s = {at} (limit {limit})")]
    Saturation { what: String, at: f64, limit: f64 },

    #[error("no zero of the shooting profile before r_max = {r_max} (center value {m})")]
    NoSolutionAtCenterValue { m: f64, r_max: f64 },

    #[error("maximum of the branch sits at the end of the grid (m = {m}); widen the grid")]
    BracketNotFound { m: f64 },

    #[error("{method} did not converge after {iterations} iterations (last estimate {last})")]
    NonConvergence { method: String, iterations: usize, last: f64 },

    #[error("Newton iteration diverged at step {step}, residual {residual:e}")]
    NewtonDivergence { step: usize, residual: f64, last_iterate: Vec<f64> },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("h2 vanishes at the regular level s = {s}")]
    Contradiction { s: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("no solution at λ = {requested}; available branch points: {available:?}")]
    Selector { requested: f64, available: Vec<f64> },

    #[error("corrupt cache {path}: {message}")]
    CorruptCache { path: String, message: String },
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
