use nalgebra::DMatrix;
use num_complex::Complex64;

use super::spd::{spd_inv_sqrt, SpdFactors};
use crate::error::{Error, Result};
use crate::linalg::{invert, max_abs, CMatrix};
use crate::network::Representation;

/// Complex symmetric array impedance (or admittance) matrix together with the
/// eigen factors of its real part.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    values: CMatrix,
    representation: Representation,
    real: SpdFactors,
    imag: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Validates reciprocity (symmetric to 1e-12 relative) and factors the
    /// real part, which must be positive definite.
    pub fn new(values: CMatrix, representation: Representation) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "coupling matrix must be square and non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("coupling matrix has non-finite entries".into()));
        }
        let asym = max_abs(&(&values - values.transpose()));
        if asym > 1e-12 * max_abs(&values) {
            return Err(Error::InvalidInput(format!(
                "coupling matrix is not symmetric (max |M - M^T| = {asym:.3e})"
            )));
        }
        let values = (&values + values.transpose()) * Complex64::new(0.5, 0.0);
        let real = spd_inv_sqrt(&values.map(|z| z.re))?;
        let imag = values.map(|z| z.im);
        Ok(Self {
            values,
            representation,
            real,
            imag,
        })
    }

    /// `value * I`, the uncoupled array.
    pub fn uncoupled(n: usize, value: Complex64, representation: Representation) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(n, n, value), representation)
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigen factors of `Re{M}`.
    pub fn real_factors(&self) -> &SpdFactors {
        &self.real
    }

    pub fn imag_part(&self) -> &DMatrix<f64> {
        &self.imag
    }

    /// `Y_II = Z_II^{-1}` (or the reverse), symmetrized.
    pub fn inverse(&self) -> Result<Self> {
        let name = match self.representation {
            Representation::Impedance => "Z_II",
            Representation::Admittance => "Y_II",
        };
        let inv = invert(&self.values, name)?;
        let inv = (&inv + inv.transpose()) * Complex64::new(0.5, 0.0);
        Self::new(inv, self.representation.dual())
    }

    /// Largest deviation among the diagonal entries, relative to their mean magnitude.
    pub fn diagonal_spread(&self) -> f64 {
        let d = self.values.diagonal();
        let mean: Complex64 = d.iter().sum::<Complex64>() / d.len() as f64;
        let dev = d.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
        dev / mean.norm().max(f64::MIN_POSITIVE)
    }
}
