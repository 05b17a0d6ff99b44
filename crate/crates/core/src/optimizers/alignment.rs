//! Alignment condition `Θ̄ ŝ_IT = e^{jφ} ŝ_RI^H` rewritten as a real linear
//! system `L α = β` in the entries of a structured symmetric load.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{real_mul, CVector, J};
use crate::network::{LoadKind, LoadPattern, ReferenceImpedance, Representation, ScatteringState};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Accepted residual `‖Lα − β‖ / ‖β‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSystem {
    /// Physical-load system `L α = β`.
    pub alpha: CVector,
    pub beta: CVector,
    /// Decoupled-load system `L̄ ᾱ = β̄`.
    pub alpha_bar: CVector,
    pub beta_bar: CVector,
    pub phase: f64,
    pub pattern: LoadPattern,
    pub kind: LoadKind,
    /// `ŝ_IT`
    pub source: CVector,
    /// `e^{jφ} ŝ_RI^H`
    pub target: CVector,
}

/// `arg(s_RT)`, or 0 when the structural term vanishes (any phase is optimal).
pub fn alignment_phase(s_rt: Complex64) -> f64 {
    if s_rt.norm() == 0.0 {
        0.0
    } else {
        s_rt.arg()
    }
}

pub fn build_alignment(
    scat: &ScatteringState,
    coupling: &CouplingMatrix,
    z0: ReferenceImpedance,
    pattern: LoadPattern,
) -> Result<AlignmentSystem> {
    build_alignment_with_phase(scat, coupling, z0, pattern, alignment_phase(scat.s_rt))
}

/// The domain follows the coupling representation: impedance couplings give
/// `ᾱ = j(u − v)`, `β̄ = Z0 (u + v)`; admittance couplings give
/// `ᾱ = j(u + v)`, `β̄ = Y0 (u − v)`, with `u = ŝ_IT`, `v = e^{jφ} ŝ_RI^H`.
pub fn build_alignment_with_phase(
    scat: &ScatteringState,
    coupling: &CouplingMatrix,
    z0: ReferenceImpedance,
    pattern: LoadPattern,
    phase: f64,
) -> Result<AlignmentSystem> {
    let n = scat.s_ri.len();
    if scat.s_it.len() != n || coupling.len() != n {
        return Err(Error::Dimension(format!(
            "scattering vectors ({}, {}) and coupling ({}) disagree",
            n,
            scat.s_it.len(),
            coupling.len()
        )));
    }
    let (nri, nit) = (scat.s_ri.norm(), scat.s_it.norm());
    if nri == 0.0 || nit == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let u = &scat.s_it / Complex64::new(nit, 0.0);
    let v = scat.s_ri.conjugate() * (Complex64::from_polar(1.0, phase) / nri);
    let repr = coupling.representation();
    let r0 = z0.reference(repr);
    let (alpha_bar, beta_bar) = match repr {
        Representation::Impedance => ((&u - &v) * J, (&u + &v) * Complex64::new(r0, 0.0)),
        Representation::Admittance => ((&u + &v) * J, (&u - &v) * Complex64::new(r0, 0.0)),
    };
    let f = coupling.real_factors();
    let alpha = real_mul(&f.inv_sqrt, &alpha_bar);
    let beta = real_mul(&f.sqrt, &beta_bar) / Complex64::new(r0, 0.0) - real_mul(coupling.imag_part(), &alpha);
    Ok(AlignmentSystem {
        alpha,
        beta,
        alpha_bar,
        beta_bar,
        phase,
        pattern,
        kind: repr.load_kind(),
        source: u,
        target: v,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSolution {
    pub values: DMatrix<f64>,
    /// `‖Lα − β‖ / ‖β‖` (absolute when `β = 0`).
    pub residual: f64,
}

fn relative_residual(m: &DMatrix<f64>, alpha: &CVector, beta: &CVector) -> (f64, f64) {
    let abs = (real_mul(m, alpha) - beta).norm();
    let nb = beta.norm();
    (abs, if nb > 0.0 { abs / nb } else { abs })
}

fn accept(values: DMatrix<f64>, alpha: &CVector, beta: &CVector) -> Result<AlignmentSolution> {
    let (abs, residual) = relative_residual(&values, alpha, beta);
    let tolerance = RESIDUAL_TOLERANCE * beta.norm();
    if !(abs <= tolerance) {
        return Err(Error::AlignmentInfeasible { residual, tolerance: RESIDUAL_TOLERANCE });
    }
    Ok(AlignmentSolution { values, residual })
}

/// Minimum-Frobenius-norm real symmetric `M` with `M α = β`.
///
/// With `A = [Re α, Im α]`, `B = [Re β, Im β]` and `C = A⁺`, the solution is
/// `M = B C + Cᵀ Bᵀ − Cᵀ Bᵀ A C`; it exists iff `Aᵀ B` is symmetric, i.e.
/// `α^H β` is real. Costs O(N²).
pub fn solve_symmetric(alpha: &CVector, beta: &CVector) -> Result<AlignmentSolution> {
    let n = alpha.len();
    if beta.len() != n {
        return Err(Error::Dimension(format!("alpha has {n} entries, beta {}", beta.len())));
    }
    let a = DMatrix::from_fn(n, 2, |i, k| if k == 0 { alpha[i].re } else { alpha[i].im });
    let b = DMatrix::from_fn(n, 2, |i, k| if k == 0 { beta[i].re } else { beta[i].im });
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let c = if smax > 0.0 {
        svd.pseudo_inverse(RANK_TOLERANCE * smax)
            .expect("both singular vector sets were computed")
    } else {
        DMatrix::zeros(2, n)
    };
    let bc = &b * &c;
    let core = b.transpose() * &a; // 2 x 2
    let m = &bc + bc.transpose() - c.transpose() * core * &c;
    accept((&m + m.transpose()) * 0.5, alpha, beta)
}

/// Stacked real system of `M α = β` over the upper-triangle unknowns of a
/// full symmetric `M`, ordered row by row (`(0,0), (0,1), …, (1,1), …`).
/// Rows `2i` and `2i+1` hold the real and imaginary parts of equation `i`.
pub fn symmetric_system(alpha: &CVector) -> DMatrix<f64> {
    let n = alpha.len();
    let mut a = DMatrix::zeros(2 * n, n * (n + 1) / 2);
    let mut col = 0;
    for i in 0..n {
        for j in i..n {
            a[(2 * i, col)] += alpha[j].re;
            a[(2 * i + 1, col)] += alpha[j].im;
            if i != j {
                a[(2 * j, col)] += alpha[i].re;
                a[(2 * j + 1, col)] += alpha[i].im;
            }
            col += 1;
        }
    }
    a
}

/// Stacked real system of `B α = β` for tridiagonal symmetric `B`; unknowns
/// are the `N` diagonal entries followed by the `N − 1` superdiagonal ones.
pub fn tridiagonal_system(alpha: &CVector) -> DMatrix<f64> {
    let n = alpha.len();
    let mut a = DMatrix::zeros(2 * n, 2 * n - 1);
    for i in 0..n {
        a[(2 * i, i)] = alpha[i].re;
        a[(2 * i + 1, i)] = alpha[i].im;
        if i > 0 {
            a[(2 * i, n + i - 1)] = alpha[i - 1].re;
            a[(2 * i + 1, n + i - 1)] = alpha[i - 1].im;
        }
        if i + 1 < n {
            a[(2 * i, n + i)] = alpha[i + 1].re;
            a[(2 * i + 1, n + i)] = alpha[i + 1].im;
        }
    }
    a
}

pub fn stack(v: &CVector) -> DVector<f64> {
    DVector::from_fn(2 * v.len(), |k, _| if k % 2 == 0 { v[k / 2].re } else { v[k / 2].im })
}

/// Minimum-norm least-squares solution with the relative rank cut-off.
///
/// Full-column-rank systems go through Householder QR, which is markedly
/// more accurate than the SVD here; rank-deficient or wide systems use the
/// truncated SVD followed by one step of iterative refinement.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() >= a.ncols() && a.ncols() > 0 {
        let qr = a.clone().qr();
        let r = qr.r();
        let d = r.diagonal().map(f64::abs);
        if d.min() > RANK_TOLERANCE * d.max() {
            let qtb = qr.q().transpose() * b;
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                return x;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DVector::zeros(a.ncols());
    }
    let eps = RANK_TOLERANCE * smax;
    let x = svd.solve(b, eps).expect("both singular vector sets were computed");
    let correction = svd
        .solve(&(b - a * &x), eps)
        .expect("both singular vector sets were computed");
    x + correction
}

/// Numerical rank with the relative cut-off used by the solvers.
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.max();
    s.iter().filter(|&&x| x > RANK_TOLERANCE * smax).count()
}

/// Tridiagonal symmetric `B` with `B α = β` from the `2N × (2N − 1)` real system.
pub fn solve_tridiagonal(alpha: &CVector, beta: &CVector) -> Result<AlignmentSolution> {
    let n = alpha.len();
    if beta.len() != n || n == 0 {
        return Err(Error::Dimension(format!("alpha has {n} entries, beta {}", beta.len())));
    }
    let x = min_norm_lstsq(&tridiagonal_system(alpha), &stack(beta));
    let mut m = DMatrix::from_diagonal(&x.rows(0, n).into_owned());
    for i in 0..n - 1 {
        m[(i, i + 1)] = x[n + i];
        m[(i + 1, i)] = x[n + i];
    }
    accept(m, alpha, beta)
}

/// Solves the physical-load system with the solver matching `sys.pattern`.
pub fn solve_symmetric_alignment(sys: &AlignmentSystem) -> Result<AlignmentSolution> {
    solve_symmetric(&sys.alpha, &sys.beta)
}

pub fn solve_tridiagonal_alignment(sys: &AlignmentSystem) -> Result<AlignmentSolution> {
    solve_tridiagonal(&sys.alpha, &sys.beta)
}
