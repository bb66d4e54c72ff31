use thiserror::Error;

/// Errors surfaced by the geometry engine.
#[derive(Debug, Error)]
pub enum GeoError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("singular block: condition number {cond:.3e} exceeds guard {guard:.3e}")]
    SingularBlock { cond: f64, guard: f64 },

    #[error("bilinear form is not symmetric (residual {0:.3e})")]
    NonSymmetric(f64),

    #[error("bilinear form is not positive definite")]
    NotPositiveDefinite,

    #[error("connection does not preserve the form: residual {0:.3e}")]
    IncompatibleConnection(f64),

    #[error("frame does not satisfy the parallel-H requirement: residual {0:.3e}")]
    IncompatibleFrame(f64),

    #[error("tensor extraction is ill-conditioned: condition number {0:.3e}")]
    ExtractionAmbiguous(f64),

    #[error("constraint system for {component} has an empty solution family")]
    EmptyFamily { component: &'static str },

    #[error("evaluation point {0:?} lies outside the declared chart domain")]
    OutsideChartDomain(Vec<f64>),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
