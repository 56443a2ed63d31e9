use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("first {dimension} design points do not identify the coefficients (pivot {pivot:e} below {tolerance:e})")]
    SingularInitialDesign {
        dimension: usize,
        pivot: f64,
        tolerance: f64,
    },
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("empty input")]
    EmptyInput,
    #[error("{0}")]
    Domain(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("monitor already consumed all {capacity} planned residuals")]
    Overrun { capacity: usize },
    #[error("adaptive quadrature did not converge on [{a}, {b}] within depth {depth}")]
    QuadratureFailure { a: f64, b: f64, depth: u32 },
    #[error("infeasible placement: {0}")]
    InfeasiblePlacement(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
