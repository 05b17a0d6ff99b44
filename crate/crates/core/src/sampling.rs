//! Fading models and the deterministic per-trial channel sampler.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::network::{ChannelTriple, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FadingModel {
    Rayleigh,
    Rician { k_factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSpec {
    pub rho_ri: f64,
    pub rho_it: f64,
    #[serde(default = "rayleigh")]
    pub model: FadingModel,
}

fn rayleigh() -> FadingModel {
    FadingModel::Rayleigh
}

impl FadingSpec {
    pub fn rayleigh(rho_ri: f64, rho_it: f64) -> Self {
        Self {
            rho_ri,
            rho_it,
            model: FadingModel::Rayleigh,
        }
    }

    /// Path gains `ρ_RI = ρ_IT = 4 Z0² · 1e-8`.
    pub fn default_for(z0: f64) -> Self {
        let rho = 4.0 * z0 * z0 * 1e-8;
        Self::rayleigh(rho, rho)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_ri >= 0.0 && self.rho_ri.is_finite() && self.rho_it >= 0.0 && self.rho_it.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "path gains must be finite and non-negative ({}, {})",
                self.rho_ri, self.rho_it
            )));
        }
        if let FadingModel::Rician { k_factor } = self.model {
            if !(k_factor >= 0.0 && k_factor.is_finite()) {
                return Err(Error::InvalidInput(format!("Rician K-factor must be non-negative, got {k_factor}")));
            }
        }
        Ok(())
    }
}

/// Generator for one trial: the key mixes `seed` and `n`, the stream is the
/// trial index, so every trial is reproducible on its own.
pub fn trial_rng(seed: u64, n: usize, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> CVector {
    let s = (rho / 2.0).sqrt();
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Unit-modulus half-wavelength array response towards `angle`.
fn steering(n: usize, angle: f64) -> CVector {
    CVector::from_fn(n, |i, _| Complex64::from_polar(1.0, PI * i as f64 * angle.sin()))
}

/// Receive-side and transmit-side line-of-sight angles of the Rician model.
pub const LOS_ANGLES: (f64, f64) = (PI / 6.0, PI / 3.0);

fn rician(scatter: CVector, rho: f64, k: f64, angle: f64) -> CVector {
    if k == 0.0 {
        return scatter;
    }
    let los = steering(scatter.len(), angle) * Complex64::new((rho * k / (k + 1.0)).sqrt(), 0.0);
    los + scatter * Complex64::new((1.0 / (k + 1.0)).sqrt(), 0.0)
}

/// Blocked direct link (`z_RT = 0`) and i.i.d. `CN(0, ρ)` RIS links; the
/// Rician model adds a fixed line-of-sight ramp.
pub fn sample_channels(fading: &FadingSpec, n: usize, rng: &mut ChaCha8Rng) -> ChannelTriple {
    let ri = gaussian_vector(rng, n, fading.rho_ri);
    let it = gaussian_vector(rng, n, fading.rho_it);
    let (ri, it) = match fading.model {
        FadingModel::Rayleigh => (ri, it),
        FadingModel::Rician { k_factor } => (
            rician(ri, fading.rho_ri, k_factor, LOS_ANGLES.0),
            rician(it, fading.rho_it, k_factor, LOS_ANGLES.1),
        ),
    };
    ChannelTriple {
        direct: Complex64::new(0.0, 0.0),
        ris_to_rx: ri,
        tx_to_ris: it,
        representation: Representation::Impedance,
    }
}

pub fn sample_trial(fading: &FadingSpec, n: usize, seed: u64, trial: u64) -> ChannelTriple {
    sample_channels(fading, n, &mut trial_rng(seed, n, trial))
}
