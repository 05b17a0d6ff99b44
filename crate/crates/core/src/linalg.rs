//! Dense linear-algebra helpers shared by the channel and solver code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition number (1-norm) above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Inverse by LU with partial pivoting. Fails with `SingularSystem` when the
/// estimated 1-norm condition number exceeds [`SINGULAR_CONDITION`].
pub fn invert(a: &CMatrix, name: &'static str) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "`{name}` is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("`{name}` has non-finite entries")));
    }
    let inv = a.clone().lu().try_inverse().ok_or(Error::SingularSystem {
        matrix: name,
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(a) * one_norm(&inv);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularSystem {
            matrix: name,
            condition,
        });
    }
    Ok(inv)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

pub fn real_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.im)
}

/// `row^T * m * col` without conjugation.
pub fn bilinear(row: &CVector, m: &CMatrix, col: &CVector) -> Complex64 {
    (row.transpose() * m * col)[(0, 0)]
}

/// Product of a real matrix with a complex vector.
pub fn real_mul(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let re = m * v.map(|z| z.re);
    let im = m * v.map(|z| z.im);
    CVector::from_iterator(v.len(), re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)))
}

pub fn symmetric_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.transpose()))
}
