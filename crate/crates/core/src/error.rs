use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precision mismatch: {left} bits vs {right} bits")]
    Precision { left: u32, right: u32 },

    #[error("precision {0} bits is below the 64-bit minimum")]
    PrecisionTooLow(u32),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max deviation {deviation:e}, allowed {allowed:e})")]
    NotSymmetric { deviation: f64, allowed: f64 },

    #[error("{what} did not converge within {iterations} iterations; try raising the precision")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model `{model}` does not have the symmetry claimed: {detail}")]
    SymmetryViolation { model: String, detail: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration guard exceeded: {0}")]
    SizeGuard(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("engine mismatch: {0}")]
    EngineMismatch(String),

    #[error("zero normalisation pivot: {0}")]
    ZeroPivot(String),

    #[error("degenerate environment: {0}")]
    Degenerate(String),

    #[error("environment was truncated; finite-lattice counts need an untruncated environment")]
    Truncated,

    #[error("power iteration for {what} is unstable: {detail}")]
    Unstable { what: &'static str, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
