use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("matrix is rank deficient (smallest singular value {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("resonant eigenvalue pair ({0}, {1}): difference is a nonzero multiple of 2π")]
    Resonance(f64, f64),

    #[error("assumption violated: {name}: {detail}")]
    Assumption { name: &'static str, detail: String },

    #[error("covariance matrix is not PSD (min eigenvalue {0:.3e})")]
    Covariance(f64),

    #[error("unitary construction failed: block residual {residual:.3e} exceeds {bound:.3e}")]
    Construction { residual: f64, bound: f64 },

    #[error("model degeneracy: {0}")]
    Degenerate(String),

    #[error("integration diverged at step {step} (norm {norm:.3e})")]
    Divergence { step: usize, norm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
