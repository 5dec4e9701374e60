use thiserror::Error;

use crate::linalg::SingularTriple;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically zero (frobenius norm {0:e})")]
    ZeroMatrix(f64),

    /// Power iteration ran out of iterations; carries the last iterate.
    #[error("power iteration did not converge after {iters} iterations")]
    NonConverged {
        iters: usize,
        last: Box<SingularTriple>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design is singular (smallest Gram eigenvalue {0:e})")]
    SingularDesign(f64),

    #[error("objective is not quadratic; curvature constants unavailable")]
    NotQuadratic,

    #[error("submodularity ratio undefined: joint gain {0:e} is not positive")]
    DenominatorZero(f64),

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("gradient vanished; no further progress possible")]
    Converged,

    #[error("no candidate atom improves the objective")]
    NoImprovement,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
