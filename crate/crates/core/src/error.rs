use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "Fock truncation at dimension {dim} leaks {leakage:.3e} of the norm \
         (tolerance {tolerance:.1e}); increase the truncation dimension"
    )]
    Truncation {
        dim: usize,
        leakage: f64,
        tolerance: f64,
    },

    #[error(
        "ancilla squeezing r' = {r_prime} is below the threshold for signal squeezing r = {r}"
    )]
    BelowThreshold { r: f64, r_prime: f64 },

    #[error("arccos argument {0} lies outside [-1, 1]")]
    ArccosDomain(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
