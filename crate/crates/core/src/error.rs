use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("did not converge within {iterations} iterations (gradient norm {grad_norm:e})")]
    Convergence { iterations: usize, grad_norm: f64 },
    #[error("model is not differentiable: {0}")]
    NotDifferentiable(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite objective value at iterate {iterate:?}")]
    Numerical { iterate: Vec<f64> },
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),
    #[error("kernel width too small: all sample weights below 1e-12")]
    KernelWidth,
    #[error("serialization error: {0}")]
    Serialization(String),
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
