use thiserror::Error;

/// Errors raised while loading scenarios, running engines or scoring outcomes.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or configuration value broke a model rule. `path` names the
    /// offending field (e.g. `licenses[2].bandwidth_mhz`).
    #[error("invalid configuration at `{path}`: {rule}")]
    Config { path: String, rule: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("welfare oracle bound exceeded: {licenses} licenses / {bidders} bidders (limit 12 / 8)")]
    OracleBoundExceeded { licenses: usize, bidders: usize },

    #[error("invalid engine input: {0}")]
    Input(String),

    #[error("round limit of {0} exceeded")]
    RoundLimit(u64),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            rule: rule.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
