use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("component {component} has effective weight {weight:e}, below the minimum")]
    EmptyComponent { component: u8, weight: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("class counts {malignant} malignant / {benign} benign, expected {expected_malignant} / {expected_benign}")]
    CountMismatch {
        malignant: usize,
        benign: usize,
        expected_malignant: usize,
        expected_benign: usize,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for numerical failures of a fit (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_) | Error::EmptyComponent { .. } | Error::Quadrature { .. }
        )
    }
}
