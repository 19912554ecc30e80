use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid setup: wrong dimensions for a model, bad proposal scales,
    /// inconsistent experiment settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad argument to an operation (non-finite values, out-of-range indices,
    /// length mismatches).
    #[error("invalid input: {0}")]
    Input(String),

    /// Input is well-formed but carries no information (constant chain,
    /// zero proposals).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A log acceptance ratio came out as NaN, which means the energy
    /// function produced NaN or `inf − inf`.
    #[error("log acceptance ratio is NaN")]
    NanLogRatio,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
