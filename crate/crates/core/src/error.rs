use crate::support::SupportSet;

/// Errors produced by the selection library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("design restricted to support {support} is rank deficient")]
    RankDeficient { support: SupportSet },

    #[error("residual sum of squares is {rss}; the criterion is undefined for an interpolating fit")]
    DegenerateFit { rss: f64 },

    #[error("every candidate support on the path was skipped ({skipped} candidates)")]
    EmptyPath { skipped: usize },
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
