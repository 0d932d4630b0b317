use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("linear system is numerically singular after jitter escalation (condition estimate {condition:.3e})")]
    Numerical { condition: f64 },

    #[error("generator produced a non-finite value in head `{head}` at t={t}")]
    Generator { head: &'static str, t: usize },

    #[error("sampling produced a non-finite value at t={t}")]
    Sampling { t: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("diagnostic unavailable: {0}")]
    Diagnostic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
