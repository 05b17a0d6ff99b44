use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigen-based matrix functions of a real symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactors {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpdFactors {
    /// `Tr(M^{-1})`
    pub fn trace_inv(&self) -> f64 {
        self.eigenvalues.iter().map(|l| 1.0 / l).sum()
    }

    /// `Tr(M^{-2})`
    pub fn trace_inv_sq(&self) -> f64 {
        self.eigenvalues.iter().map(|l| 1.0 / (l * l)).sum()
    }

    pub fn condition_number(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

fn spectral_function(q: &DMatrix<f64>, eig: &DVector<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * f(eig[j]));
    let m = &scaled * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Inverse square root, square root and inverse of a real symmetric matrix via
/// its eigendecomposition.
///
/// Fails with `NotPositiveDefinite` when `lambda_min <= 1e-12 * lambda_max`.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<SpdFactors> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = m.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
    let (eigenvalues, eigenvectors) = if diagonal {
        (m.diagonal(), DMatrix::identity(n, n))
    } else {
        let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
        (eig.eigenvalues, eig.eigenvectors)
    };
    let lambda_min = eigenvalues.min();
    let lambda_max = eigenvalues.max();
    if lambda_max <= 0.0 || lambda_min <= 1e-12 * lambda_max {
        return Err(Error::NotPositiveDefinite {
            lambda_min,
            lambda_max,
        });
    }
    let q = &eigenvectors;
    let ev = &eigenvalues;
    let func = |f: fn(f64) -> f64| {
        if diagonal {
            DMatrix::from_diagonal(&ev.map(f))
        } else {
            spectral_function(q, ev, f)
        }
    };
    Ok(SpdFactors {
        sqrt: func(f64::sqrt),
        inv_sqrt: func(|l| 1.0 / l.sqrt()),
        inv: func(|l| 1.0 / l),
        eigenvalues: eigenvalues.clone(),
        eigenvectors: eigenvectors.clone(),
        lambda_min,
        lambda_max,
    })
}

/// Smallest and largest eigenvalue of a real symmetric matrix.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn scaled_identity() {
        let f = spd_inv_sqrt(&(DMatrix::identity(3, 3) * 4.0)).unwrap();
        assert!(max_abs(&(f.inv_sqrt - DMatrix::identity(3, 3) * 0.5)) < 1e-15);
    }

    #[test]
    fn diagonal() {
        let f = spd_inv_sqrt(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 9.0]))).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 3.0]));
        assert!(max_abs(&(f.inv_sqrt - expected)) < 1e-15);
    }

    #[test]
    fn random_spd_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 16;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
        let f = spd_inv_sqrt(&m).unwrap();
        let id = &f.inv_sqrt * &m * &f.inv_sqrt;
        assert!(max_abs(&(id - DMatrix::identity(n, n))) <= 1e-10);
        assert!(max_abs(&(&f.inv_sqrt - f.inv_sqrt.transpose())) == 0.0);
        assert!(max_abs(&(&f.inv * &m - DMatrix::identity(n, n))) <= 1e-10);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(spd_inv_sqrt(&m), Err(Error::NotPositiveDefinite { .. })));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-13]));
        assert!(matches!(spd_inv_sqrt(&m), Err(Error::NotPositiveDefinite { .. })));
    }
}
