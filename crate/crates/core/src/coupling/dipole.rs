//! Induced-EMF mutual impedance between parallel thin-wire dipoles.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::geometry::{DipoleArrayGeometry, ETA0};
use super::matrix::CouplingMatrix;
use super::quadrature::{AdaptiveIntegrator, GaussLegendre};
use super::spd::eigen_extremes;
use crate::error::{Error, Result};
use crate::linalg::J;
use crate::network::Representation;

/// Tensor-product Gauss–Legendre settings for non-collinear pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Nodes per axis, split evenly over the two halves of each dipole.
    pub nodes_per_axis: usize,
    /// Recompute with doubled nodes and fail if the two disagree.
    pub check_convergence: bool,
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            nodes_per_axis: 32,
            check_convergence: true,
            tolerance: 1e-6,
        }
    }
}

/// Sinusoidal current of a center-fed dipole normalized to the feed current,
/// as a function of the offset from the center.
fn current(k0: f64, half_len: f64, s: f64) -> f64 {
    (k0 * (half_len - s.abs())).sin() / (k0 * half_len).sin()
}

/// Integrand kernel for two y-directed current elements separated by
/// `sqrt(dx2)` across and `t` along the wires.
fn kernel(k0: f64, dx2: f64, t: f64) -> Complex64 {
    let d2 = dx2 + t * t;
    let d = d2.sqrt();
    let jk = J * k0;
    let bracket = (t * t / d2) * (3.0 / d2 + jk * 3.0 / d - k0 * k0) - (jk + 1.0 / d) / d + k0 * k0;
    J * (ETA0 / (4.0 * PI * k0)) * bracket * (-jk * d).exp() / d
}

/// Mutual impedance `[Z_II]_{q,p}` in ohms between elements `p` and `q`.
pub fn mutual_impedance(geom: &DipoleArrayGeometry, p: usize, q: usize) -> Result<Complex64> {
    mutual_impedance_with(geom, p, q, &QuadratureOptions::default())
}

pub fn mutual_impedance_with(
    geom: &DipoleArrayGeometry,
    p: usize,
    q: usize,
    opts: &QuadratureOptions,
) -> Result<Complex64> {
    geom.validate()?;
    let n = geom.len();
    if p >= n || q >= n {
        return Err(Error::Geometry(format!("element index out of range for {n} elements")));
    }
    let (xp, yp) = geom.position(p);
    let (xq, yq) = geom.position(q);
    offset_impedance(geom, xq - xp, yq - yp, opts)
}

/// Mutual impedance for a pair whose centers differ by `(dx, dy)` meters.
pub fn offset_impedance(
    geom: &DipoleArrayGeometry,
    dx: f64,
    dy: f64,
    opts: &QuadratureOptions,
) -> Result<Complex64> {
    let tiny = 1e-9 * geom.wavelength();
    if dx.abs() <= tiny && dy.abs() <= tiny {
        return Err(Error::Geometry("coincident dipole centers".into()));
    }
    if dx.abs() <= tiny {
        collinear(geom, dy.abs())
    } else {
        side_by_side(geom, dx.abs(), dy.abs(), opts)
    }
}

fn tensor_rule(geom: &DipoleArrayGeometry, dx: f64, dy: f64, nodes_per_axis: usize) -> Complex64 {
    let k0 = geom.wavenumber();
    let h = 0.5 * geom.dipole_length;
    let gl = GaussLegendre::new((nodes_per_axis / 2).max(1));
    let pts: Vec<(f64, f64)> = gl
        .mapped(-h, 0.0)
        .chain(gl.mapped(0.0, h))
        .map(|(s, w)| (s, w * current(k0, h, s)))
        .collect();
    let dx2 = dx * dx;
    let mut acc = Complex64::new(0.0, 0.0);
    for &(s1, w1) in &pts {
        for &(s2, w2) in &pts {
            acc += kernel(k0, dx2, dy + s2 - s1) * (w1 * w2);
        }
    }
    acc
}

fn side_by_side(geom: &DipoleArrayGeometry, dx: f64, dy: f64, opts: &QuadratureOptions) -> Result<Complex64> {
    let base = tensor_rule(geom, dx, dy, opts.nodes_per_axis);
    if !opts.check_convergence {
        return Ok(base);
    }
    let refined = tensor_rule(geom, dx, dy, 2 * opts.nodes_per_axis);
    let err = (refined - base).norm();
    if !refined.re.is_finite() || err > opts.tolerance * refined.norm() {
        return Err(Error::Quadrature {
            estimate: refined,
            error_bound: err,
        });
    }
    Ok(refined)
}

/// Collinear pairs reduce to a single integral over the along-wire offset
/// `t = y'' - y'` weighted by the autocorrelation of the current profile.
/// Overlapping wires use the wire radius as a minimum separation.
fn collinear(geom: &DipoleArrayGeometry, dy: f64) -> Result<Complex64> {
    let k0 = geom.wavenumber();
    let len = geom.dipole_length;
    let h = 0.5 * len;
    let overlapping = dy < len * (1.0 - 1e-9);
    let dx2 = if overlapping { geom.wire_radius.powi(2) } else { 0.0 };
    let inner = GaussLegendre::new(20);
    let autocorrelation = |tau: f64| -> f64 {
        let lo = (-h).max(-h - tau);
        let hi = h.min(h - tau);
        if hi <= lo {
            return 0.0;
        }
        let mut cuts = vec![lo, hi];
        for c in [0.0, -tau] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| inner.integrate_real(w[0], w[1], |s| current(k0, h, s) * current(k0, h, s + tau)))
            .sum()
    };
    let mut breaks: Vec<f64> = [-len, -h, 0.0, h, len].iter().map(|tau| dy + tau).collect();
    if dy - len < 0.0 && 0.0 < dy + len {
        breaks.push(0.0);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * len);
    AdaptiveIntegrator::default().integrate(&breaks, |t| kernel(k0, dx2, t) * autocorrelation(t - dy))
}

/// Array impedance matrix: `self_impedance` on the diagonal, induced-EMF
/// mutual impedances elsewhere.
pub fn build_coupling_matrix(geom: &DipoleArrayGeometry, self_impedance: Complex64) -> Result<CouplingMatrix> {
    build_coupling_matrix_with(geom, self_impedance, &QuadratureOptions::default())
}

pub fn build_coupling_matrix_with(
    geom: &DipoleArrayGeometry,
    self_impedance: Complex64,
    opts: &QuadratureOptions,
) -> Result<CouplingMatrix> {
    let values = coupling_values(geom, self_impedance, opts)?;
    let (lambda_min, lambda_max) = eigen_extremes(&values.map(|z| z.re));
    if lambda_min < -1e-9 * lambda_max.abs() {
        return Err(Error::Passivity {
            lambda_min,
            lambda_max,
            matrix: Box::new(values),
        });
    }
    CouplingMatrix::new(values, Representation::Impedance)
}

/// Raw impedance matrix without passivity screening.
pub fn coupling_values(
    geom: &DipoleArrayGeometry,
    self_impedance: Complex64,
    opts: &QuadratureOptions,
) -> Result<DMatrix<Complex64>> {
    geom.validate()?;
    if !(self_impedance.re > 0.0) || !self_impedance.im.is_finite() {
        return Err(Error::InvalidInput(
            "self impedance must have a positive real part".into(),
        ));
    }
    let n = geom.len();
    // Entries depend only on |column offset| and |row offset|.
    let offsets: Vec<(usize, usize)> = (0..geom.n_x)
        .flat_map(|c| (0..geom.n_y).map(move |r| (c, r)))
        .filter(|&o| o != (0, 0))
        .collect();
    let values: Vec<Complex64> = offsets
        .par_iter()
        .map(|&(c, r)| offset_impedance(geom, c as f64 * geom.spacing, r as f64 * geom.spacing, opts))
        .collect::<Result<_>>()?;
    let table: HashMap<(usize, usize), Complex64> = offsets.into_iter().zip(values).collect();
    let mut m = DMatrix::from_element(n, n, self_impedance);
    for p in 0..n {
        let (cp, rp) = geom.grid_index(p);
        for q in (p + 1)..n {
            let (cq, rq) = geom.grid_index(q);
            let z = table[&(cp.abs_diff(cq), rp.abs_diff(rq))];
            m[(p, q)] = z;
            m[(q, p)] = z;
        }
    }
    Ok(m)
}
