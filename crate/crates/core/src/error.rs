use thiserror::Error;

/// Errors raised by model construction, design optimization and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("singular matrix ({what}): reciprocal condition number {rcond:.3e}")]
    Singular { what: String, rcond: f64 },

    #[error("c-vector is not estimable: {0}")]
    Infeasible(String),

    #[error("degenerate quantile: {0}")]
    DegenerateQuantile(String),

    #[error("h is not monotone on [{lo}, {hi}]; the quantile is ambiguous")]
    Ambiguous { lo: f64, hi: f64 },

    #[error("{n_units} units cannot realize a design with {support} support points (need at least {support})")]
    TooFewUnits { n_units: usize, support: usize },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn singular(what: impl Into<String>, rcond: f64) -> Self {
        Error::Singular {
            what: what.into(),
            rcond,
        }
    }
}
