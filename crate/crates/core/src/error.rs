use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter (copula, margin, kappa, level, ...) lies outside its domain.
    #[error("domain error: {name} = {value} violates {bound}")]
    Domain {
        name: String,
        value: f64,
        bound: String,
    },

    /// Malformed user input: model strings, grids, scenario files, CSV rows.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    /// Conditional inversion did not bracket the root to tolerance in time.
    #[error("generation error: {family} root-finding did not converge for conditional quantile w = {quantile} after {iterations} iterations")]
    Generation {
        family: String,
        quantile: f64,
        iterations: usize,
    },

    /// The chi-squared covariance estimate cannot be factorized.
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("limit unknown: {0}")]
    LimitUnknown(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(name: &str, value: f64, bound: &str) -> Self {
        Error::Domain {
            name: name.to_string(),
            value,
            bound: bound.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
