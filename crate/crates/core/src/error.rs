use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, target {target:.3e}")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    #[error("quadrature instability: {0}")]
    QuadratureInstability(String),

    #[error(
        "circulant embedding failed: most negative eigenvalue ratio {ratio:.3e} is below -{tol:.1e}"
    )]
    EmbeddingFailure { ratio: f64, tol: f64 },

    #[error("spectral synthesis bias too large: lag-0 covariance bias {bias:.3e} exceeds {max:.3e}")]
    SpectralBias { bias: f64, max: f64 },

    #[error("unsupported Wick order {order} for model {model}: order * zeta = {product} >= 1")]
    UnsupportedOrder {
        order: usize,
        product: f64,
        model: String,
    },

    #[error("non-integrable singularity for model {model}: zeta = {zeta} >= 1")]
    NonIntegrable { zeta: f64, model: String },

    #[error("no Hermite rank: every a_k with 1 <= k <= {truncation} is below tolerance {tol:.1e}")]
    NoRank { truncation: usize, tol: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/validation problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::Precondition(_)
            | Error::NoRank { .. } => 2,
            Error::QuadratureNonConvergence { .. }
            | Error::QuadratureInstability(_)
            | Error::EmbeddingFailure { .. }
            | Error::SpectralBias { .. }
            | Error::UnsupportedOrder { .. }
            | Error::NonIntegrable { .. }
            | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
