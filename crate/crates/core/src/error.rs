use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("malformed forecast: {0}")]
    MalformedForecast(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("weights are off the simplex (total {total})")]
    OffSimplex { total: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("missing entry: {0}")]
    Missing(String),

    #[error("threshold {0} is not on the 0.0..=10.0 grid with step 0.1")]
    OffGridThreshold(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid run state: {0}")]
    Run(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
