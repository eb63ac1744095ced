use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("truncation tail {tail:.3e} exceeds tolerance; try levels_per_mode >= {suggested}")]
    Truncation { tail: f64, suggested: usize },

    #[error("ill-conditioned interval: delta^2 within {margin:.1e} of eigenvalue {eigenvalue}; try delta = {suggested}")]
    IllConditioned {
        eigenvalue: f64,
        margin: f64,
        suggested: f64,
    },

    #[error("precondition: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: last two refinements {prev} and {last}")]
    Quadrature { prev: f64, last: f64 },

    #[error("extrapolation failed: fit residual {residual:.3e}")]
    Extrapolation { residual: f64 },

    #[error("statistical error {stderr:.3e} above threshold {threshold:.3e}")]
    Statistical { stderr: f64, threshold: f64 },

    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
