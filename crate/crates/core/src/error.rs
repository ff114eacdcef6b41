use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by the CLI exit code they map to (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid index: {0}")]
    Index(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("model error: {0}")]
    Model(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stats error: {0}")]
    Stats(String),

    #[error("independence violation: vertices {0} and {1} are adjacent")]
    Independence(usize, usize),

    #[error("problem too large for exhaustive search: n = {n} exceeds {max}")]
    Size { n: usize, max: usize },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("recombination error: variables {uncovered:?} are not covered by any sub-system")]
    Recombination { uncovered: Vec<usize> },

    #[error("degenerate encoding: the first {n_s} amplitudes are all zero")]
    DegenerateEncoding { n_s: usize },

    #[error("approximation ratio undefined for classical energy {0}")]
    UndefinedRatio(f64),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Coverage(_) => 1,
            Error::Ingest { .. }
            | Error::Model(_)
            | Error::Stats(_)
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Dimension { .. }
            | Error::Index(_)
            | Error::InvalidProblem(_) => 2,
            Error::Independence(..)
            | Error::Size { .. }
            | Error::Recombination { .. }
            | Error::DegenerateEncoding { .. }
            | Error::UndefinedRatio(_) => 3,
        }
    }
}
