use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block {block} is not symmetric (max deviation {deviation:e})")]
    NonSymmetricBlock { block: &'static str, deviation: f64 },

    #[error("covariance matrix is not symmetric (max deviation {deviation:e})")]
    NonSymmetricMatrix { deviation: f64 },

    #[error("covariance matrix contains non-finite entries")]
    NonFinite,

    #[error("symplectic eigenvalues are complex (discriminant {discriminant:e})")]
    ComplexEigenvalue { discriminant: f64 },

    #[error("state fails bona-fide condition (nu_minus = {nu_minus})")]
    UnphysicalInput { nu_minus: f64 },

    #[error("det(E) = {det:e} is not positive")]
    DegenerateE { det: f64 },

    #[error("eta must be positive, got {0}")]
    InvalidEta(f64),

    #[error("gain must be finite and non-negative, got {0}")]
    InvalidGain(f64),

    #[error("transmissibility must lie in [0, 1], got {0}")]
    InvalidTransmissibility(f64),

    #[error("Alice's mode has tr(A) = 2; W_sum has no interior minimum in g")]
    DegenerateAlice,

    #[error("Alice's channel is fully attenuated (t_A = 0)")]
    TotalAttenuation,

    #[error("canonical basis rotation left cross term {residual:e}")]
    CanonicalizationFailed { residual: f64 },

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },

    #[error("output covariance is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NonPositiveOutputCovariance { min_eigenvalue: f64 },

    #[error("nonzero mean vector; only zero-mean states are supported")]
    NonZeroMean,

    #[error("at least {min} samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid state file: {0}")]
    StateFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that stem from a violated precondition on otherwise
    /// well-formed input (unphysical states, degenerate configurations).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::UnphysicalInput { .. }
                | Error::DegenerateE { .. }
                | Error::DegenerateAlice
                | Error::TotalAttenuation
                | Error::NonPositiveDefinite { .. }
                | Error::NonPositiveOutputCovariance { .. }
                | Error::CanonicalizationFailed { .. }
                | Error::ComplexEigenvalue { .. }
        )
    }
}
