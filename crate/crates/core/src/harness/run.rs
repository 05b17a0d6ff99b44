//! Monte Carlo sweeps over array size, spacing, architecture and awareness.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{Awareness, ExperimentKind, ExperimentSpec};
use crate::coupling::{build_coupling_matrix_with, CouplingMatrix, DipoleArrayGeometry, QuadratureOptions};
use crate::error::{Error, Result};
use crate::network::{ChannelTriple, CouplingPair, Representation};
use crate::optimizers::{assumed_coupling, optimize, upper_bound_fc, Architecture};
use crate::sampling::sample_trial;
use crate::scaling::{estimate_terms, scaling_mc, scaling_nomc, ScalingReport};

/// One optimiser run on one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub n: usize,
    pub spacing_wl: f64,
    pub architecture: String,
    pub awareness: String,
    pub trial: usize,
    /// `|h|²` under the true coupling.
    pub gain_linear: Option<f64>,
    pub gain_db: Option<f64>,
    /// Upper bound under the true coupling.
    pub bound_linear: Option<f64>,
    pub residual: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Aggregate over the trials of one `(n, spacing, architecture, awareness)`
/// point. dB figures are taken of the mean linear gain, with the stderr
/// carried through to first order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub n: usize,
    pub spacing_wl: f64,
    pub architecture: String,
    pub awareness: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_gain_linear: f64,
    pub stderr_linear: f64,
    pub mean_gain_db: f64,
    pub stderr_db: f64,
    pub mean_bound_linear: f64,
    /// Coupled scaling law for the coupling the trials were evaluated under.
    pub law_mc: f64,
    pub law_nomc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn failure_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.failures() as f64 / self.records.len() as f64
        }
    }

    pub fn row(&self, n: usize, spacing_wl: f64, architecture: Architecture, awareness: Awareness) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| {
            r.n == n
                && r.spacing_wl == spacing_wl
                && r.architecture == architecture.label()
                && r.awareness == awareness.label()
        })
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Dipole coupling of an `n`-element array at `spacing_wl` wavelengths.
pub fn dipole_coupling(spec: &ExperimentSpec, n: usize, spacing_wl: f64) -> Result<CouplingMatrix> {
    let geom = DipoleArrayGeometry::with_template(n, spacing_wl, &spec.geometry)?;
    build_coupling_matrix_with(&geom, spec.self_impedance(), &QuadratureOptions::default())
}

/// Couplings shared by every trial of one `(n, spacing)` point.
struct PointCouplings {
    dipole: Option<CouplingPair>,
    uncoupled: CouplingPair,
    assumed: CouplingPair,
}

impl PointCouplings {
    fn build(spec: &ExperimentSpec, n: usize, spacing_wl: f64) -> Result<Self> {
        let z0 = spec.reference()?;
        let needs_dipole = spec.awareness.iter().any(|a| *a != Awareness::NoCoupling);
        let dipole = if needs_dipole { Some(CouplingPair::new(dipole_coupling(spec, n, spacing_wl)?)?) } else { None };
        Ok(Self {
            dipole,
            uncoupled: CouplingPair::new(CouplingMatrix::uncoupled(n, spec.self_impedance(), Representation::Impedance)?)?,
            assumed: CouplingPair::new(assumed_coupling(n, z0)?)?,
        })
    }

    fn truth(&self, awareness: Awareness) -> &CouplingPair {
        match (awareness, &self.dipole) {
            (Awareness::NoCoupling, _) | (_, None) => &self.uncoupled,
            (_, Some(d)) => d,
        }
    }
}

struct Outcome {
    gain: f64,
    bound: f64,
    residual: f64,
}

fn run_one(
    spec: &ExperimentSpec,
    chan: &ChannelTriple,
    couplings: &PointCouplings,
    architecture: Architecture,
    awareness: Awareness,
) -> Result<Outcome> {
    let z0 = spec.reference()?;
    let truth = couplings.truth(awareness);
    let aware = awareness != Awareness::Unaware;
    let (config, gain) = optimize(architecture, aware, chan, truth, &couplings.assumed, z0, &spec.ascent)?;
    let bound = if aware { config.bound_gain } else { upper_bound_fc(chan, &truth.z, z0)? };
    if !(gain.is_finite() && gain >= 0.0) {
        return Err(Error::InvalidInput(format!("non-finite gain {gain}")));
    }
    Ok(Outcome {
        gain,
        bound,
        residual: config.residual,
    })
}

fn check_sweep(spec: &ExperimentSpec) -> Result<()> {
    spec.validate()?;
    if !matches!(
        spec.kind,
        ExperimentKind::SweepN | ExperimentKind::SweepSpacing | ExperimentKind::SingleInstance | ExperimentKind::SelfTest
    ) {
        return Err(Error::Config(format!("`{}` is not a sweep experiment", spec.kind.label())));
    }
    Ok(())
}

/// Runs every `(n, spacing, architecture, awareness, trial)` combination.
/// All combinations of one point share the same channel draws, and the
/// output order does not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    check_sweep(spec)?;
    let z0 = spec.reference()?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &n in &spec.n_list {
        for &spacing in &spec.spacing_list {
            let couplings = PointCouplings::build(spec, n, spacing)?;
            let channels: Vec<ChannelTriple> = (0..spec.trials)
                .into_par_iter()
                .map(|t| sample_trial(&spec.fading, n, spec.seed, t as u64))
                .collect();
            let combos: Vec<(Architecture, Awareness, usize)> = spec
                .architectures
                .iter()
                .flat_map(|&a| spec.awareness.iter().flat_map(move |&w| (0..spec.trials).map(move |t| (a, w, t))))
                .collect();
            let point: Vec<TrialRecord> = combos
                .par_iter()
                .map(|&(architecture, awareness, trial)| {
                    let start = Instant::now();
                    let outcome = run_one(spec, &channels[trial], &couplings, architecture, awareness);
                    let runtime_ms = spec.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
                    let mut rec = TrialRecord {
                        experiment: spec.id.clone(),
                        n,
                        spacing_wl: spacing,
                        architecture: architecture.label().into(),
                        awareness: awareness.label().into(),
                        trial,
                        gain_linear: None,
                        gain_db: None,
                        bound_linear: None,
                        residual: None,
                        runtime_ms,
                        error: None,
                    };
                    match outcome {
                        Ok(o) => {
                            rec.gain_linear = Some(o.gain);
                            rec.gain_db = Some(to_db(o.gain));
                            rec.bound_linear = Some(o.bound);
                            rec.residual = Some(o.residual);
                        }
                        Err(e) => rec.error = Some(e.to_string()),
                    }
                    rec
                })
                .collect();

            let law_nomc = scaling_nomc(&spec.fading, spec.self_impedance().re, n, z0)?;
            for &architecture in &spec.architectures {
                for &awareness in &spec.awareness {
                    let law_mc = scaling_mc(&spec.fading, &couplings.truth(awareness).z, z0)?;
                    let rows = point
                        .iter()
                        .filter(|r| r.architecture == architecture.label() && r.awareness == awareness.label());
                    summary.push(summarize(spec, n, spacing, architecture, awareness, rows, law_mc, law_nomc));
                }
            }
            let failed = point.iter().filter(|r| r.failed()).count();
            if failed > 0 {
                warn!("n = {n}, d = {spacing}: {failed} of {} runs failed", point.len());
            }
            info!("n = {n}, d = {spacing}: {} runs", point.len());
            records.extend(point);
        }
    }
    Ok(ExperimentOutput {
        spec: spec.clone(),
        records,
        summary,
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize<'a>(
    spec: &ExperimentSpec,
    n: usize,
    spacing_wl: f64,
    architecture: Architecture,
    awareness: Awareness,
    rows: impl Iterator<Item = &'a TrialRecord>,
    law_mc: f64,
    law_nomc: f64,
) -> SummaryRow {
    let (mut count, mut failures) = (0usize, 0usize);
    let (mut sum, mut sum_sq, mut bound_sum) = (0.0, 0.0, 0.0);
    for r in rows {
        match (r.gain_linear, r.bound_linear) {
            (Some(g), Some(b)) => {
                count += 1;
                sum += g;
                sum_sq += g * g;
                bound_sum += b;
            }
            _ => failures += 1,
        }
    }
    let m = count as f64;
    let mean = if count > 0 { sum / m } else { f64::NAN };
    let stderr = if count > 1 { ((sum_sq - m * mean * mean).max(0.0) / (m - 1.0) / m).sqrt() } else { f64::NAN };
    SummaryRow {
        experiment: spec.id.clone(),
        n,
        spacing_wl,
        architecture: architecture.label().into(),
        awareness: awareness.label().into(),
        trials: count,
        failures,
        mean_gain_linear: mean,
        stderr_linear: stderr,
        mean_gain_db: to_db(mean),
        stderr_db: 10.0 / std::f64::consts::LN_10 * stderr / mean,
        mean_bound_linear: if count > 0 { bound_sum / m } else { f64::NAN },
        law_mc,
        law_nomc,
    }
}

/// One `(n, spacing)` point of a scaling-law validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub spacing_wl: f64,
    pub law_nomc: f64,
    pub report: ScalingReport,
}

/// Scaling-law validation on dipole couplings for every `(n, spacing)`.
pub fn run_scaling(spec: &ExperimentSpec) -> Result<Vec<ScalingRow>> {
    spec.validate()?;
    let z0 = spec.reference()?;
    let mut rows = Vec::new();
    for &n in &spec.n_list {
        for &spacing in &spec.spacing_list {
            let z_ii = dipole_coupling(spec, n, spacing)?;
            let report = estimate_terms(&spec.fading, &z_ii, z0, spec.trials, spec.seed)?;
            info!("n = {n}, d = {spacing}: relative error {:.3e}", report.relative_error());
            rows.push(ScalingRow {
                n,
                spacing_wl: spacing,
                law_nomc: scaling_nomc(&spec.fading, spec.self_impedance().re, n, z0)?,
                report,
            });
        }
    }
    Ok(rows)
}

/// Coupling matrix together with the metadata written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSidecar {
    pub n: usize,
    pub spacing_wl: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub frequency_hz: f64,
    pub wavelength_m: f64,
    pub dipole_length_wl: f64,
    pub wire_radius_wl: f64,
    pub self_impedance: [f64; 2],
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn coupling_with_sidecar(spec: &ExperimentSpec, n: usize, spacing_wl: f64) -> Result<(CouplingMatrix, CouplingSidecar)> {
    let geom = DipoleArrayGeometry::with_template(n, spacing_wl, &spec.geometry)?;
    let z_ii = build_coupling_matrix_with(&geom, spec.self_impedance(), &QuadratureOptions::default())?;
    let f = z_ii.real_factors();
    let n_x = spec.geometry.n_x.min(n);
    let zs: Complex64 = spec.self_impedance();
    let sidecar = CouplingSidecar {
        n,
        spacing_wl,
        n_x,
        n_y: n / n_x,
        frequency_hz: spec.geometry.frequency,
        wavelength_m: geom.wavelength(),
        dipole_length_wl: spec.geometry.dipole_length_wavelengths,
        wire_radius_wl: spec.geometry.wire_radius_wavelengths,
        self_impedance: [zs.re, zs.im],
        lambda_min: f.lambda_min,
        lambda_max: f.lambda_max,
    };
    Ok((z_ii, sidecar))
}

/// Mean linear gains keyed by `(architecture, awareness)` at one point.
pub fn mean_gains(out: &ExperimentOutput, n: usize, spacing_wl: f64) -> BTreeMap<(String, String), f64> {
    out.summary
        .iter()
        .filter(|r| r.n == n && r.spacing_wl == spacing_wl)
        .map(|r| ((r.architecture.clone(), r.awareness.clone()), r.mean_gain_linear))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::defaults(kind);
        s.n_list = vec![8];
        s.spacing_list = vec![0.5, 0.25];
        s.trials = 12;
        s
    }

    #[test]
    fn cardinality_and_order() {
        let s = small(ExperimentKind::SweepSpacing);
        let out = run_experiment(&s).unwrap();
        assert_eq!(out.summary.len(), 2 * 3 * 2);
        assert_eq!(out.records.len(), 2 * 3 * 2 * 12);
        assert_eq!(out.failures(), 0);
        assert_eq!(out.records[0].trial, 0);
        assert_eq!(out.records[11].trial, 11);
        assert_eq!(out.records[12].awareness, "unaware");
    }

    #[test]
    fn aware_records_respect_bound() {
        let s = small(ExperimentKind::SweepSpacing);
        let out = run_experiment(&s).unwrap();
        for r in &out.records {
            let (g, b) = (r.gain_linear.unwrap(), r.bound_linear.unwrap());
            assert!(g >= 0.0);
            assert!(g <= b * (1.0 + 1e-8), "{r:?}");
            if r.architecture != "dris" && r.awareness == "aware" {
                assert!((g / b - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn common_random_numbers_across_architectures() {
        let mut s = small(ExperimentKind::SweepN);
        s.awareness = vec![Awareness::Aware, Awareness::NoCoupling];
        let out = run_experiment(&s).unwrap();
        let gains: Vec<_> = out.records.iter().filter(|r| r.awareness == "aware" && r.spacing_wl == 0.25).map(|r| r.gain_linear.unwrap()).collect();
        let per = gains.len() / 2;
        for t in 0..per {
            assert!((gains[t] / gains[per + t] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let s = small(ExperimentKind::SweepSpacing);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_experiment(&s)).unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_experiment(&s)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn scaling_kind_is_not_a_sweep() {
        let s = ExperimentSpec::defaults(ExperimentKind::ScalingValidation);
        assert!(matches!(run_experiment(&s), Err(Error::Config(_))));
    }

    #[test]
    fn summary_db_matches_linear() {
        let s = small(ExperimentKind::SweepN);
        let out = run_experiment(&s).unwrap();
        for r in &out.summary {
            assert!((r.mean_gain_db - to_db(r.mean_gain_linear)).abs() < 1e-12);
            assert!(r.mean_bound_linear >= r.mean_gain_linear * (1.0 - 1e-8));
            assert!(r.law_mc > 0.0 && r.law_nomc > 0.0);
        }
    }
}
