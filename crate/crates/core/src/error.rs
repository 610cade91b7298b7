use thiserror::Error;

/// Errors produced by construction and propagation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix violates the hermiticity tolerance: residual {residual:.3e} > {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error("matrix violates the unitarity tolerance: residual {residual:.3e} > {tolerance:.3e}")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("eigenfactorization failed: residual {residual:.3e}")]
    EigenFailure { residual: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("state vector norm {norm} is not 1 within tolerance")]
    NotNormalized { norm: f64 },

    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("declared bound violated: {context} measured {measured:.6e} exceeds declared {declared:.6e}")]
    BoundViolation {
        context: &'static str,
        measured: f64,
        declared: f64,
    },

    #[error("step refinement did not converge after {halvings} halvings (last difference {last_diff:.3e}, tolerance {tolerance:.3e})")]
    NonConvergence {
        halvings: u32,
        last_diff: f64,
        tolerance: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of iterative numerical processes, as opposed to
    /// rejected inputs. Callers that map errors to process exit codes use
    /// this to distinguish "bad configuration" from "did not converge".
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::EigenFailure { .. }
        )
    }
}
