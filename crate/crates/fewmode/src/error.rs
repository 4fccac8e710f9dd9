use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver error at E = {energy}: {message}")]
    Solver { energy: f64, message: String },
    #[error("accuracy error at E = {energy}: residual {residual:e} exceeds {tolerance:e}")]
    Accuracy { energy: f64, residual: f64, tolerance: f64 },
    #[error("singular matrix at E = {energy}: {message}")]
    Singular { energy: f64, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        Error::Config { path: path.to_string(), message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub fn solver(energy: f64, message: impl Into<String>) -> Self {
        Error::Solver { energy, message: message.into() }
    }

    pub fn singular(energy: f64, message: impl Into<String>) -> Self {
        Error::Singular { energy, message: message.into() }
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Validation(_) => 1,
            _ => 2,
        }
    }
}
