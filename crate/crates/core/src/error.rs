use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument must be nonzero: {0}")]
    ZeroArgument(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("theta rescaling overflows at shift exponent m = {m}")]
    ThetaRange { m: i64 },

    #[error("quadrature did not converge after {halvings} halvings (last change {last_change:e}, tolerance {tol:e})")]
    NonConvergence {
        halvings: usize,
        last_change: f64,
        tol: f64,
    },

    #[error("point {z} is not in the theta-safe domain of direction {lambda} (margin {margin:e} <= delta {delta})")]
    NotThetaSafe {
        z: num_complex::Complex64,
        lambda: num_complex::Complex64,
        margin: f64,
        delta: f64,
    },

    #[error("growth type {mbar} is not below xi/(2 log|q|) = {limit}")]
    Divergent { mbar: f64, limit: f64 },

    #[error("pole of the recursion: tau = -1")]
    Pole,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("coefficient {k} did not stabilize (residual {residual:e})")]
    NonStabilization { k: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
