use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent input data.
    Data,
    /// A numerical routine could not produce a valid result.
    Numerical,
    /// Invalid configuration or model specification.
    Config,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Data => 1,
            ErrorClass::Numerical => 2,
            ErrorClass::Config => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate key {key} at line {line}")]
    DuplicateKey { key: String, line: u64 },

    #[error("incomplete day {date}: {hours} hours present (expected 23, 24 or 25)")]
    IncompleteDay { date: NaiveDate, hours: usize },

    #[error("gap in {what}: {} missing date(s): {}", missing.len(), format_dates(missing))]
    Gap {
        what: &'static str,
        missing: Vec<NaiveDate>,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("collinear design columns: {}", columns.join(", "))]
    Collinearity { columns: Vec<String> },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("insufficient data: {n} observations for {p} parameters")]
    InsufficientData { n: usize, p: usize },

    #[error("HAC max lag {max_lag} must be smaller than the sample size {n}")]
    Lag { max_lag: usize, n: usize },

    #[error("AR(1) parameter {0} outside the stationary region |phi| < 1")]
    Stationarity(f64),

    #[error("optimizer did not converge after {iterations} iterations; trace: {trace}")]
    Convergence { iterations: usize, trace: String },

    #[error("covariance error: {0}")]
    Covariance(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("specification error: {0}")]
    Spec(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::DuplicateKey { .. }
            | Error::IncompleteDay { .. }
            | Error::Gap { .. }
            | Error::Alignment(_)
            | Error::Domain(_)
            | Error::Range(_)
            | Error::Data(_)
            | Error::Io { .. }
            | Error::Json(_) => ErrorClass::Data,
            Error::Collinearity { .. }
            | Error::Singular(_)
            | Error::InsufficientData { .. }
            | Error::Stationarity(_)
            | Error::Convergence { .. }
            | Error::Covariance(_) => ErrorClass::Numerical,
            Error::Lag { .. } | Error::Spec(_) | Error::Config(_) => ErrorClass::Config,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

fn format_dates(dates: &[NaiveDate]) -> String {
    const SHOWN: usize = 20;
    let mut s = dates
        .iter()
        .take(SHOWN)
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if dates.len() > SHOWN {
        s.push_str(&format!(", ... ({} more)", dates.len() - SHOWN));
    }
    s
}
