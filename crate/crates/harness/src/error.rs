use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] mixtest_core::Error),
    #[error("unknown tester `{0}` (expected identity, closeness or kflat)")]
    UnknownTester(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no instance found: {0}")]
    Infeasible(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
