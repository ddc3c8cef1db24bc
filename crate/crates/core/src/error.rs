use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} is isolated; the normalized Laplacian is undefined there")]
    IsolatedVertex { vertex: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("graph has {n} vertices, above the dense oracle cap of {cap} (oracle path only)")]
    OracleCap { n: usize, cap: usize },

    #[error("eigendecomposition failed to converge")]
    Eigensolver,

    #[error("exact solve broke down: {0}")]
    SolverBreakdown(String),

    #[error("row {row} of the Jacobi matrix has modulus sum {row_sum} >= 1 (not diagonally dominant)")]
    NotDiagonallyDominant { row: usize, row_sum: f64 },

    #[error("Jacobi contraction factor kappa = {0} is not below 1")]
    KappaNotContractive(f64),

    #[error("community {community} not connected after {retries} resamples")]
    Disconnected { community: usize, retries: usize },

    #[error("filter output on the impulse has norm {0:e}, too small for a decay certificate")]
    ZeroResponse(f64),

    #[error("nonzero Jacobi output at vertex {vertex} outside the {radius}-hop ball")]
    SupportViolation { vertex: usize, radius: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Diverged { epoch: usize },

    #[error("matrix market parse error at line {line}: {reason}")]
    MatrixMarket { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}
