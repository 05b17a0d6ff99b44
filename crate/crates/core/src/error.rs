use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix `{matrix}` is singular (estimated condition number {condition:.3e})")]
    SingularSystem { matrix: &'static str, condition: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("representation mismatch: expected {expected}, found {found}")]
    Representation {
        expected: &'static str,
        found: &'static str,
    },

    #[error("matrix is not positive definite (lambda_min = {lambda_min:.3e}, lambda_max = {lambda_max:.3e})")]
    NotPositiveDefinite { lambda_min: f64, lambda_max: f64 },

    #[error("scattering matrix has an eigenvalue {distance:.3e} away from the Cayley pole")]
    CayleyPole { distance: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:.3e}")]
    Quadrature {
        estimate: Complex64,
        error_bound: f64,
    },

    /// The real part of a built coupling matrix has a negative eigenvalue beyond
    /// tolerance. The offending matrix is attached for inspection.
    #[error("passivity violated: lambda_min(Re) = {lambda_min:.3e}, lambda_max(Re) = {lambda_max:.3e}")]
    Passivity {
        lambda_min: f64,
        lambda_max: f64,
        matrix: Box<DMatrix<Complex64>>,
    },

    #[error("channel vector is zero; every load is optimal")]
    DegenerateChannel,

    #[error("alignment system infeasible: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    AlignmentInfeasible { residual: f64, tolerance: f64 },

    #[error("diagonal entries are not constant (spread {spread:.3e})")]
    NonConstantDiagonal { spread: f64 },

    #[error("invalid value: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
