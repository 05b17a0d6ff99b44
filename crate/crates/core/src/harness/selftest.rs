//! Fast end-to-end sanity battery behind `coupled-ris selftest`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::run::dipole_coupling;
use super::spec::{ExperimentKind, ExperimentSpec};
use crate::error::Result;
use crate::linalg::{max_abs, CMatrix};
use crate::network::{cayley, cayley_inv, channel_y, channel_z, z_to_y, CouplingPair, LoadKind, LoadMatrix, ReferenceImpedance};
use crate::optimizers::{optimize_fully_connected, optimize_tree_connected_with, upper_bound_fc, upper_bound_tc};
use crate::sampling::{sample_trial, FadingSpec};
use crate::scaling::{coupling_benefit_margin, lemma_checks};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

impl SelfTestCheck {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
    (&a + a.transpose()) * 0.5
}

/// Runs the battery on dipole arrays of 4, 8 and 16 elements at spacings of
/// a half, a quarter and an eighth of a wavelength.
pub fn run_selftest(seed: u64) -> Result<Vec<SelfTestCheck>> {
    let spec = ExperimentSpec::defaults(ExperimentKind::SelfTest);
    let z0 = ReferenceImpedance::new(spec.z0)?;
    let fading = FadingSpec::default_for(spec.z0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ratio, mut ub_gap, mut zy, mut unitary, mut round_trip) = (0f64, 0f64, 0f64, 0f64, 0f64);
    let (mut psd, mut benefit) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in [4, 8, 16] {
        for d in [0.5, 0.25, 0.125] {
            let z_ii = dipole_coupling(&spec, n, d)?;
            let f = z_ii.real_factors();
            psd = psd.max(-f.lambda_min / f.lambda_max);
            benefit = benefit.max(-coupling_benefit_margin(&fading, &z_ii, z0)?);
            let pair = CouplingPair::new(z_ii.clone())?;
            for trial in 0..4 {
                let chan = sample_trial(&fading, n, seed, trial);
                let fc = optimize_fully_connected(&chan, &z_ii, z0)?;
                let tc = optimize_tree_connected_with(&chan, &pair, z0)?;
                let ub = upper_bound_fc(&chan, &z_ii, z0)?;
                ratio = ratio.max((fc.achieved_gain / ub - 1.0).abs()).max((tc.achieved_gain / ub - 1.0).abs());
                let (ychan, y_ii) = z_to_y(&chan, &z_ii, z0)?;
                ub_gap = ub_gap.max((ub - upper_bound_tc(&ychan, &y_ii, z0)?).abs() / ub);

                let x = LoadMatrix::symmetric(LoadKind::ReactanceX, random_symmetric(&mut rng, n, 50.0))?;
                let hz = channel_z(&chan, &x, &z_ii, z0)?;
                let theta = cayley(&x, z0);
                // The same physical load seen from the admittance side.
                let b = cayley_inv(&theta, z0, LoadKind::SusceptanceB)?;
                let hy = channel_y(&ychan, &b, &y_ii, z0)?;
                zy = zy.max((hz - hy).norm() / hz.norm());

                let id = CMatrix::identity(n, n);
                unitary = unitary.max(max_abs(&(theta.adjoint() * &theta - &id))).max(max_abs(&(&theta - theta.transpose())));
                let back = cayley_inv(&theta, z0, LoadKind::ReactanceX)?;
                let scale = x.values().amax().max(z0.z0());
                round_trip = round_trip.max((back.values() - x.values()).amax() / scale);
            }
        }
    }
    let lemma = {
        let (m1, m2) = lemma_checks(&DMatrix::from_diagonal_element(8, 8, 3.0))?;
        m1.abs().max(m2.abs())
    };
    let determinism = {
        let a = sample_trial(&fading, 16, seed, 7);
        let b = sample_trial(&fading, 16, seed, 7);
        let same = a.ris_to_rx == b.ris_to_rx && a.tx_to_ris == b.tx_to_ris && a.direct == Complex64::new(0.0, 0.0);
        if same { 0.0 } else { 1.0 }
    };
    Ok(vec![
        SelfTestCheck::new("bound_achievement", ratio, 1e-8),
        SelfTestCheck::new("fc_tc_bound_equality", ub_gap, 1e-10),
        SelfTestCheck::new("z_y_equivalence", zy, 1e-11),
        SelfTestCheck::new("cayley_unitary_symmetric", unitary, 1e-12),
        SelfTestCheck::new("cayley_round_trip", round_trip, 1e-9),
        SelfTestCheck::new("coupling_psd", psd, 0.0),
        SelfTestCheck::new("coupling_benefit", benefit, 0.0),
        SelfTestCheck::new("lemma_equality_scalar_diagonal", lemma, 1e-12),
        SelfTestCheck::new("sampler_determinism", determinism, 0.0),
    ])
}
