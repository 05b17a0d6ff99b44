//! Closed-form channel-gain upper bounds in either representation.

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{bilinear, real_mul, to_complex};
use crate::network::{ChannelTriple, ReferenceImpedance, Representation};

/// `(|m_RT - ½ m_RI R^{-1} m_IT| + ½ ‖m_RI R^{-1/2}‖ ‖R^{-1/2} m_IT‖)² / (4 r0²)`
/// with `R` the real part of the coupling and `r0` the matching reference.
pub fn upper_bound(chan: &ChannelTriple, coupling: &CouplingMatrix, z0: ReferenceImpedance) -> Result<f64> {
    if chan.representation != coupling.representation() {
        return Err(Error::Representation {
            expected: chan.representation.name(),
            found: coupling.representation().name(),
        });
    }
    if chan.len() != coupling.len() {
        return Err(Error::Dimension(format!(
            "channel has {} elements, coupling matrix {}",
            chan.len(),
            coupling.len()
        )));
    }
    let f = coupling.real_factors();
    let cross = bilinear(&chan.ris_to_rx, &to_complex(&f.inv), &chan.tx_to_ris);
    let a = real_mul(&f.inv_sqrt, &chan.ris_to_rx).norm();
    let b = real_mul(&f.inv_sqrt, &chan.tx_to_ris).norm();
    let r0 = z0.reference(chan.representation);
    let amplitude = (chan.direct - cross * 0.5).norm() + 0.5 * a * b;
    Ok(amplitude * amplitude / (4.0 * r0 * r0))
}

pub fn upper_bound_fc(chan: &ChannelTriple, z_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<f64> {
    if chan.representation != Representation::Impedance {
        return Err(Error::Representation {
            expected: "impedance",
            found: chan.representation.name(),
        });
    }
    upper_bound(chan, z_ii, z0)
}

pub fn upper_bound_tc(chan: &ChannelTriple, y_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<f64> {
    if chan.representation != Representation::Admittance {
        return Err(Error::Representation {
            expected: "admittance",
            found: chan.representation.name(),
        });
    }
    upper_bound(chan, y_ii, z0)
}
