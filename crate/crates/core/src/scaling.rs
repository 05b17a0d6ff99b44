//! Closed-form scaling laws of the average optimal channel gain, their
//! per-term Monte Carlo estimators and the trace inequalities behind the
//! coupling benefit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::coupling::{spd_inv_sqrt, CouplingMatrix};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, real_mul, to_complex};
use crate::network::{ReferenceImpedance, Representation};
use crate::sampling::{sample_trial, FadingSpec};

/// Relative tolerance for "constant diagonal".
pub const DIAGONAL_TOLERANCE: f64 = 1e-9;

fn check_impedance(z_ii: &CouplingMatrix) -> Result<()> {
    if z_ii.representation() != Representation::Impedance {
        return Err(Error::Representation {
            expected: "impedance",
            found: z_ii.representation().name(),
        });
    }
    Ok(())
}

/// `(ρ_RI ρ_IT / 16 Z0²)(T2 + T1² + sqrt(π T2) T1)` with `T1 = Tr(R⁻¹)`,
/// `T2 = Tr(R⁻²)`, `R = Re{Z_II}`.
pub fn scaling_mc(fading: &FadingSpec, z_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<f64> {
    check_impedance(z_ii)?;
    let f = z_ii.real_factors();
    Ok(law(fading, z0, f.trace_inv(), f.trace_inv_sq()))
}

fn law(fading: &FadingSpec, z0: ReferenceImpedance, t1: f64, t2: f64) -> f64 {
    let pre = fading.rho_ri * fading.rho_it / (16.0 * z0.z0() * z0.z0());
    pre * (t2 + t1 * t1 + (PI * t2).sqrt() * t1)
}

/// `(ρ_RI ρ_IT / (16 Z0² R_s²))(N + N² + sqrt(π N) N)` for self-resistance `R_s`.
pub fn scaling_nomc(fading: &FadingSpec, z_self: f64, n: usize, z0: ReferenceImpedance) -> Result<f64> {
    if !(z_self > 0.0 && z_self.is_finite()) {
        return Err(Error::InvalidInput(format!("self-resistance must be positive, got {z_self}")));
    }
    let n = n as f64;
    Ok(law(fading, z0, n / z_self, n / (z_self * z_self)))
}

/// `Γ(n + ½) / Γ(n)` via log-Gamma.
pub fn gamma_ratio(n: usize) -> f64 {
    let n = n as f64;
    (ln_gamma(n + 0.5) - ln_gamma(n)).exp()
}

/// Population correlation between `|x^T y|` and `‖x‖` for independent
/// `x, y ~ CN(0, I_n)`. Conditioned on `x`, `|x^T y|` is `‖x‖` times a unit
/// Rayleigh variable, which gives `cv_x / sqrt(cv_x² cv_g² + cv_x² + cv_g²)`.
pub fn uncoupled_cross_norm_correlation(n: usize) -> f64 {
    let mu = gamma_ratio(n);
    let cv_x = (n as f64 - mu * mu).sqrt() / mu;
    let cv_g2 = 4.0 / PI - 1.0;
    cv_x / (cv_x * cv_x * cv_g2 + cv_x * cv_x + cv_g2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub closed_form: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// The closed form relies on channel hardening (`E‖x‖ ≈ sqrt(E‖x‖²)`).
    pub asymptotic: bool,
    /// Exact expectation when known in closed form.
    pub exact: Option<f64>,
}

impl TermEstimate {
    /// `|estimate − closed_form| / stderr`; infinite when stderr is zero and they differ.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.closed_form).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: usize,
    pub trials: usize,
    pub closed_form: f64,
    /// No-coupling law at the mean self-resistance.
    pub closed_form_nomc: f64,
    pub monte_carlo_mean: f64,
    pub monte_carlo_stderr: f64,
    pub per_term: BTreeMap<String, TermEstimate>,
    /// Sample correlation between `|z_RI R⁻¹ z_IT|` and `‖z_RI R^{-1/2}‖`.
    pub cross_norm_correlation: f64,
    /// Condition number of `R⁻¹`.
    pub condition_number: f64,
}

impl ScalingReport {
    pub fn relative_error(&self) -> f64 {
        (self.monte_carlo_mean - self.closed_form).abs() / self.closed_form
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean_stderr(&self, m: usize) -> (f64, f64) {
        let m = m as f64;
        let mean = self.sum / m;
        let var = ((self.sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
        (mean, (var / m).sqrt())
    }
}

const TERMS: usize = 11;

/// Monte Carlo check of the scaling law and of every expectation it is built
/// from, on Rayleigh (or Rician) channels with a blocked direct link.
pub fn estimate_terms(
    fading: &FadingSpec,
    z_ii: &CouplingMatrix,
    z0: ReferenceImpedance,
    trials: usize,
    seed: u64,
) -> Result<ScalingReport> {
    check_impedance(z_ii)?;
    fading.validate()?;
    if trials < 100 {
        return Err(Error::InvalidInput(format!("at least 100 trials required, got {trials}")));
    }
    let n = z_ii.len();
    let f = z_ii.real_factors();
    let rinv = to_complex(&f.inv);
    let r0 = z0.z0();
    let mean_self = z_ii.values().diagonal().iter().map(|z| z.re).sum::<f64>() / n as f64;

    // Per trial: [gain, |q|², a², b², |q|, a, b, |q0|², ‖z_RI‖², |q0|, ‖z_RI‖].
    let samples: Vec<[f64; TERMS]> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = sample_trial(fading, n, seed, t);
            let q = bilinear(&ch.ris_to_rx, &rinv, &ch.tx_to_ris).norm();
            let a = real_mul(&f.inv_sqrt, &ch.ris_to_rx).norm();
            let b = real_mul(&f.inv_sqrt, &ch.tx_to_ris).norm();
            let amp = (q + a * b) / (4.0 * r0);
            let q0 = ch.ris_to_rx.dot(&ch.tx_to_ris).norm();
            let a0 = ch.ris_to_rx.norm();
            [amp * amp, q * q, a * a, b * b, q, a, b, q0 * q0, a0 * a0, q0, a0]
        })
        .collect();

    let mut moments = [Moments::default(); TERMS];
    let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in &samples {
        for (m, &x) in moments.iter_mut().zip(s.iter()) {
            m.push(x);
        }
        let (x, y) = (s[4], s[5]);
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    let m = trials as f64;
    let cov = sxy / m - (sx / m) * (sy / m);
    let correlation = cov / ((sxx / m - (sx / m).powi(2)).sqrt() * (syy / m - (sy / m).powi(2)).sqrt());

    let (rr, ri, rt) = (fading.rho_ri * fading.rho_it, fading.rho_ri, fading.rho_it);
    let (t1, t2) = (f.trace_inv(), f.trace_inv_sq());
    let nn = n as f64;
    let g = gamma_ratio(n);
    let spec: [(&str, f64, bool, Option<f64>); TERMS] = [
        ("gain", law(fading, z0, t1, t2), true, None),
        ("cross_sq", rr * t2, false, None),
        ("norm_sq_ri", ri * t1, false, None),
        ("norm_sq_it", rt * t1, false, None),
        ("cross_abs", (PI * rr * t2 / 4.0).sqrt(), true, None),
        ("norm_ri", (ri * t1).sqrt(), true, None),
        ("norm_it", (rt * t1).sqrt(), true, None),
        ("nomc_cross_sq", rr * nn, false, None),
        ("nomc_norm_sq_ri", ri * nn, false, None),
        ("nomc_cross_abs", (PI * rr * nn / 4.0).sqrt(), true, Some((PI * rt / 4.0).sqrt() * ri.sqrt() * g)),
        ("nomc_norm_ri", (ri * nn).sqrt(), true, Some(ri.sqrt() * g)),
    ];
    let mut per_term = BTreeMap::new();
    for ((name, closed_form, asymptotic, exact), mo) in spec.into_iter().zip(moments.iter()) {
        let (estimate, stderr) = mo.mean_stderr(trials);
        per_term.insert(
            name.to_string(),
            TermEstimate {
                closed_form,
                estimate,
                stderr,
                asymptotic,
                exact,
            },
        );
    }
    let (mean, stderr) = moments[0].mean_stderr(trials);
    Ok(ScalingReport {
        n,
        trials,
        closed_form: law(fading, z0, t1, t2),
        closed_form_nomc: scaling_nomc(fading, mean_self, n, z0)?,
        monte_carlo_mean: mean,
        monte_carlo_stderr: stderr,
        per_term,
        cross_norm_correlation: correlation,
        condition_number: f.condition_number(),
    })
}

fn check_constant_diagonal(values: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let diag: Vec<(f64, f64)> = values.collect();
    let (re0, im0) = diag[0];
    let scale = (re0 * re0 + im0 * im0).sqrt().max(f64::MIN_POSITIVE);
    let spread = diag
        .iter()
        .map(|&(re, im)| ((re - re0).powi(2) + (im - im0).powi(2)).sqrt())
        .fold(0.0, f64::max)
        / scale;
    if spread > DIAGONAL_TOLERANCE {
        return Err(Error::NonConstantDiagonal { spread });
    }
    Ok(re0)
}

/// `(Tr(m⁻¹) − N/a, Tr(m⁻²) − N/a²)` for an SPD `m` with constant diagonal `a`.
/// Both margins are non-negative, with equality iff `m = aI`.
pub fn lemma_checks(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension("lemma checks need a non-empty square matrix".into()));
    }
    let a = check_constant_diagonal(m.diagonal().iter().map(|&v| (v, 0.0)))?;
    let f = spd_inv_sqrt(m)?;
    let n = m.nrows() as f64;
    Ok((f.trace_inv() - n / a, f.trace_inv_sq() - n / (a * a)))
}

/// `scaling_mc − scaling_nomc` at the common self-resistance.
pub fn coupling_benefit_margin(fading: &FadingSpec, z_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<f64> {
    check_impedance(z_ii)?;
    let r_self = check_constant_diagonal(z_ii.values().diagonal().iter().map(|z| (z.re, z.im)))?;
    Ok(scaling_mc(fading, z_ii, z0)? - scaling_nomc(fading, r_self, z_ii.len(), z0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_coupling_matrix, DipoleArrayGeometry};
    use crate::linalg::CMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> (FadingSpec, ReferenceImpedance) {
        (FadingSpec::rayleigh(1.0, 1.0), ReferenceImpedance::new(1.0).unwrap())
    }

    fn identity(n: usize, r: f64) -> CouplingMatrix {
        CouplingMatrix::uncoupled(n, Complex64::new(r, 0.0), Representation::Impedance).unwrap()
    }

    /// Random SPD matrix with unit diagonal (a correlation matrix).
    fn correlation_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n + 2, |_, _| rng.random_range(-1.0..1.0));
        let s: DMatrix<f64> = &a * a.transpose();
        let d = s.diagonal().map(|v: f64| 1.0 / v.sqrt());
        let dm = DMatrix::from_diagonal(&d);
        let c = &dm * s * &dm;
        let mut c = (&c + c.transpose()) * 0.5;
        c.fill_diagonal(1.0);
        c
    }

    #[test]
    fn closed_form_values() {
        let (f, z0) = unit();
        assert!((scaling_nomc(&f, 1.0, 1, z0).unwrap() - 0.23578).abs() < 1e-5);
        let v = scaling_nomc(&f, 1.0, 64, z0).unwrap();
        assert!((v - 316.72).abs() < 0.01, "{v}");
        let v = scaling_mc(&f, &identity(64, 1.0), z0).unwrap();
        assert!((v - 316.72).abs() < 0.01);
        let doubled = FadingSpec::rayleigh(2.0, 1.0);
        assert!((scaling_nomc(&doubled, 1.0, 64, z0).unwrap() - 2.0 * v).abs() < 1e-9);
    }

    #[test]
    fn identity_coupling_reduces_to_nomc() {
        let f = FadingSpec::default_for(50.0);
        let z0 = ReferenceImpedance::default();
        for n in [1, 16, 64] {
            let mc = scaling_mc(&f, &identity(n, 50.0), z0).unwrap();
            let nomc = scaling_nomc(&f, 50.0, n, z0).unwrap();
            assert!((mc - nomc).abs() <= 1e-12 * nomc);
            assert!(coupling_benefit_margin(&f, &identity(n, 50.0), z0).unwrap().abs() <= 1e-12 * nomc);
        }
    }

    #[test]
    fn gamma_ratio_oracle() {
        let g = gamma_ratio(64);
        assert!((g - 7.9844).abs() < 1e-4, "{g}");
        assert!((8.0 - g) / g < 2e-3);
        assert!((gamma_ratio(1) - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn lemma_margins() {
        let m = DMatrix::identity(5, 5) * 3.0;
        let (a, b) = lemma_checks(&m).unwrap();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let c = correlation_matrix(&mut rng, 16);
            let (a, b) = lemma_checks(&c).unwrap();
            assert!(a >= -1e-9 && b >= -1e-9);
        }
        let mut bad = DMatrix::identity(3, 3);
        bad[(2, 2)] = 2.0;
        assert!(matches!(lemma_checks(&bad), Err(Error::NonConstantDiagonal { .. })));
    }

    #[test]
    fn random_spd_coupling_benefit() {
        let f = FadingSpec::default_for(50.0);
        let z0 = ReferenceImpedance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..20 {
            let c = correlation_matrix(&mut rng, 12) * 50.0;
            let im = DMatrix::from_fn(12, 12, |i, j| ((i * 7 + j * 7) % 5) as f64 * if i == j { 0.0 } else { 1.0 });
            let m = CMatrix::from_fn(12, 12, |i, j| Complex64::new(c[(i, j)], im[(i, j)]));
            let z = CouplingMatrix::new(m, Representation::Impedance).unwrap();
            assert!(coupling_benefit_margin(&f, &z, z0).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn dipole_lemmas_and_benefit() {
        let f = FadingSpec::default_for(50.0);
        let z0 = ReferenceImpedance::default();
        let mut last = -1.0;
        for d in [0.5, 1.0 / 3.0, 0.25] {
            let geom = DipoleArrayGeometry::standard(16, d).unwrap();
            let z = build_coupling_matrix(&geom, Complex64::new(50.0, 0.0)).unwrap();
            let (a, b) = lemma_checks(&z.values().map(|v| v.re)).unwrap();
            assert!(a >= -1e-9 && b >= -1e-9);
            let margin = coupling_benefit_margin(&f, &z, z0).unwrap();
            assert!(margin >= 0.0 && margin > last, "d={d}: {margin}");
            last = margin;
        }
    }

    #[test]
    fn identity_estimates_track_closed_forms() {
        let (f, z0) = unit();
        let r = estimate_terms(&f, &identity(16, 1.0), z0, 2000, 5).unwrap();
        assert!(r.relative_error() < 0.03, "{}", r.relative_error());
        for (name, t) in &r.per_term {
            if !t.asymptotic {
                assert!(t.z_score() <= 3.0, "{name}: {t:?}");
            }
            if let Some(exact) = t.exact {
                assert!((t.estimate - exact).abs() <= 3.0 * t.stderr, "{name}: {t:?}");
            }
        }
        assert!(r.per_term["norm_sq_ri"].estimate > 0.0);
    }

    #[test]
    fn cross_norm_correlation_matches_closed_form() {
        // Oracle: n = 1 reduces to corr(|x| |g|, |x|) with both Rayleigh.
        let cv2 = 4.0 / PI - 1.0;
        let one = (cv2 / (cv2 * cv2 + 2.0 * cv2)).sqrt();
        assert!((uncoupled_cross_norm_correlation(1) - one).abs() < 1e-12);
        let rho = uncoupled_cross_norm_correlation(64);
        assert!((rho - 0.1186).abs() < 1e-3, "{rho}");
        let (f, z0) = unit();
        let trials = 4000;
        let r = estimate_terms(&f, &identity(64, 1.0), z0, trials, 11).unwrap();
        let sd = (1.0 - rho * rho) / (trials as f64).sqrt();
        assert!((r.cross_norm_correlation - rho).abs() <= 3.0 * sd, "{} vs {rho}", r.cross_norm_correlation);
    }

    #[test]
    fn estimates_are_deterministic() {
        let (f, z0) = unit();
        let a = estimate_terms(&f, &identity(8, 1.0), z0, 200, 9).unwrap();
        let b = estimate_terms(&f, &identity(8, 1.0), z0, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(estimate_terms(&f, &identity(8, 1.0), z0, 50, 9).is_err());
    }
}
