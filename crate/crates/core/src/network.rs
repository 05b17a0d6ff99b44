//! Multiport-network channel algebra: Z/Y channel models, the decoupling
//! transform that whitens the real part of the coupling, the S-domain
//! mapping, and the Cayley transform between loads and scattering matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{bilinear, invert, max_abs_real, real_mul, to_complex, CMatrix, CVector, J};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Impedance,
    Admittance,
}

impl Representation {
    pub fn dual(self) -> Self {
        match self {
            Representation::Impedance => Representation::Admittance,
            Representation::Admittance => Representation::Impedance,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::Impedance => "impedance",
            Representation::Admittance => "admittance",
        }
    }

    /// Load kind that lives naturally in this representation.
    pub fn load_kind(self) -> LoadKind {
        match self {
            Representation::Impedance => LoadKind::ReactanceX,
            Representation::Admittance => LoadKind::SusceptanceB,
        }
    }
}

/// Reference impedance `Z0` of the ports (ohms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceImpedance(f64);

impl ReferenceImpedance {
    pub fn new(z0: f64) -> Result<Self> {
        if !(z0 > 0.0 && z0.is_finite()) {
            return Err(Error::InvalidInput(format!("reference impedance must be positive, got {z0}")));
        }
        Ok(Self(z0))
    }

    pub fn z0(self) -> f64 {
        self.0
    }

    pub fn y0(self) -> f64 {
        1.0 / self.0
    }

    /// `Z0` for impedance quantities, `Y0` for admittance quantities.
    pub fn reference(self, repr: Representation) -> f64 {
        match repr {
            Representation::Impedance => self.z0(),
            Representation::Admittance => self.y0(),
        }
    }
}

impl Default for ReferenceImpedance {
    fn default() -> Self {
        Self(50.0)
    }
}

/// Direct link, RIS-to-receiver row and transmitter-to-RIS column in one
/// parameter representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTriple {
    pub direct: Complex64,
    /// Entries of the `1 x N` row vector.
    pub ris_to_rx: CVector,
    pub tx_to_ris: CVector,
    pub representation: Representation,
}

impl ChannelTriple {
    pub fn new(direct: Complex64, ris_to_rx: CVector, tx_to_ris: CVector, representation: Representation) -> Result<Self> {
        if ris_to_rx.len() != tx_to_ris.len() || ris_to_rx.is_empty() {
            return Err(Error::Dimension(format!(
                "channel vectors must have equal non-zero length ({} vs {})",
                ris_to_rx.len(),
                tx_to_ris.len()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(&direct) || !ris_to_rx.iter().all(finite) || !tx_to_ris.iter().all(finite) {
            return Err(Error::InvalidInput("channel entries must be finite".into()));
        }
        Ok(Self {
            direct,
            ris_to_rx,
            tx_to_ris,
            representation,
        })
    }

    pub fn len(&self) -> usize {
        self.ris_to_rx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ris_to_rx.is_empty()
    }

    fn expect(&self, repr: Representation) -> Result<()> {
        if self.representation != repr {
            return Err(Error::Representation {
                expected: repr.name(),
                found: self.representation.name(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    /// Reactance matrix `X` (ohms), load impedance `jX`.
    ReactanceX,
    /// Susceptance matrix `B` (siemens), load admittance `jB`.
    SusceptanceB,
}

impl LoadKind {
    pub fn representation(self) -> Representation {
        match self {
            LoadKind::ReactanceX => Representation::Impedance,
            LoadKind::SusceptanceB => Representation::Admittance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    Full,
    Tridiagonal,
    Diagonal,
}

impl LoadPattern {
    pub fn allows(self, i: usize, j: usize) -> bool {
        match self {
            LoadPattern::Full => true,
            LoadPattern::Tridiagonal => i.abs_diff(j) <= 1,
            LoadPattern::Diagonal => i == j,
        }
    }
}

/// Real symmetric load matrix. Built by mirroring the upper triangle, so it
/// is exactly symmetric, and zero outside its sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMatrix {
    kind: LoadKind,
    pattern: LoadPattern,
    values: DMatrix<f64>,
}

impl LoadMatrix {
    pub fn symmetric(kind: LoadKind, values: DMatrix<f64>) -> Result<Self> {
        Self::with_pattern(kind, LoadPattern::Full, values)
    }

    /// Keeps the upper-triangle entries allowed by `pattern` and mirrors them.
    pub fn with_pattern(kind: LoadKind, pattern: LoadPattern, values: DMatrix<f64>) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "load matrix must be square and non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("load matrix has non-finite entries".into()));
        }
        let n = values.nrows();
        let values = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            if pattern.allows(a, b) {
                values[(a, b)]
            } else {
                0.0
            }
        });
        Ok(Self { kind, pattern, values })
    }

    pub fn tridiagonal(kind: LoadKind, diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || off.len() + 1 != n {
            return Err(Error::Dimension(format!(
                "tridiagonal load needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                n,
                off.len()
            )));
        }
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        for (i, &e) in off.iter().enumerate() {
            m[(i, i + 1)] = e;
        }
        Self::with_pattern(kind, LoadPattern::Tridiagonal, m)
    }

    pub fn diagonal(kind: LoadKind, diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Dimension("diagonal load needs at least one entry".into()));
        }
        Self::with_pattern(
            kind,
            LoadPattern::Diagonal,
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        )
    }

    pub fn zeros(kind: LoadKind, n: usize) -> Result<Self> {
        Self::symmetric(kind, DMatrix::zeros(n, n))
    }

    pub fn kind(&self) -> LoadKind {
        self.kind
    }

    pub fn pattern(&self) -> LoadPattern {
        self.pattern
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// True when every entry outside `pattern` is exactly zero.
    pub fn respects(&self, pattern: LoadPattern) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..n).all(|j| pattern.allows(i, j) || self.values[(i, j)] == 0.0))
    }
}

/// Channels mapped to the S-domain plus, optionally, the scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringState {
    pub s_rt: Complex64,
    pub s_ri: CVector,
    pub s_it: CVector,
    pub theta: Option<CMatrix>,
}

impl ScatteringState {
    /// `s_RT + s_RI * theta * s_IT`
    pub fn response(&self, theta: &CMatrix) -> Complex64 {
        self.s_rt + bilinear(&self.s_ri, theta, &self.s_it)
    }
}

fn check_dims(n: usize, what: &str, m: usize) -> Result<()> {
    if n != m {
        return Err(Error::Dimension(format!("{what} has size {m}, channel has {n} elements")));
    }
    Ok(())
}

fn check_coupling(coupling: &CouplingMatrix, repr: Representation) -> Result<()> {
    if coupling.representation() != repr {
        return Err(Error::Representation {
            expected: repr.name(),
            found: coupling.representation().name(),
        });
    }
    Ok(())
}

fn check_load(load: &LoadMatrix, kind: LoadKind) -> Result<()> {
    if load.kind() != kind {
        return Err(Error::Representation {
            expected: kind.representation().name(),
            found: load.kind().representation().name(),
        });
    }
    Ok(())
}

/// `h = (z_RT - z_RI (jX + Z_II)^{-1} z_IT) / (2 Z0)`
pub fn channel_z(chan: &ChannelTriple, x: &LoadMatrix, z_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<Complex64> {
    chan.expect(Representation::Impedance)?;
    check_load(x, LoadKind::ReactanceX)?;
    check_coupling(z_ii, Representation::Impedance)?;
    check_dims(chan.len(), "reactance matrix", x.len())?;
    check_dims(chan.len(), "coupling matrix", z_ii.len())?;
    let a = to_complex(x.values()) * J + z_ii.values();
    let inv = invert(&a, "jX_I + Z_II")?;
    Ok((chan.direct - bilinear(&chan.ris_to_rx, &inv, &chan.tx_to_ris)) / (2.0 * z0.z0()))
}

/// `h = (-y_RT + y_RI (jB + Y_II)^{-1} y_IT) / (2 Y0)`
pub fn channel_y(chan: &ChannelTriple, b: &LoadMatrix, y_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<Complex64> {
    chan.expect(Representation::Admittance)?;
    check_load(b, LoadKind::SusceptanceB)?;
    check_coupling(y_ii, Representation::Admittance)?;
    check_dims(chan.len(), "susceptance matrix", b.len())?;
    check_dims(chan.len(), "coupling matrix", y_ii.len())?;
    let a = to_complex(b.values()) * J + y_ii.values();
    let inv = invert(&a, "jB_I + Y_II")?;
    Ok((-chan.direct + bilinear(&chan.ris_to_rx, &inv, &chan.tx_to_ris)) / (2.0 * z0.y0()))
}

/// Channel in whichever representation `chan` uses.
pub fn channel(chan: &ChannelTriple, load: &LoadMatrix, coupling: &CouplingMatrix, z0: ReferenceImpedance) -> Result<Complex64> {
    match chan.representation {
        Representation::Impedance => channel_z(chan, load, coupling, z0),
        Representation::Admittance => channel_y(chan, load, coupling, z0),
    }
}

/// Channel for a load given by its reflection matrix `Θ = (jX + Z0 I)^{-1}(jX - Z0 I)`,
/// using `(jX + Z_II)^{-1} = (I - Θ)[Z0 (I + Θ) + Z_II (I - Θ)]^{-1}`. Stays finite
/// when an element is open-circuited (eigenvalue of `Θ` at +1).
pub fn channel_z_from_theta(
    chan: &ChannelTriple,
    theta: &CMatrix,
    z_ii: &CouplingMatrix,
    z0: ReferenceImpedance,
) -> Result<Complex64> {
    chan.expect(Representation::Impedance)?;
    check_coupling(z_ii, Representation::Impedance)?;
    check_dims(chan.len(), "scattering matrix", theta.nrows())?;
    check_dims(chan.len(), "coupling matrix", z_ii.len())?;
    let n = chan.len();
    let id = CMatrix::identity(n, n);
    let minus = &id - theta;
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || theta[(i, j)] == Complex64::new(0.0, 0.0)));
    let z_minus = if diagonal {
        let mut m = z_ii.values().clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= minus[(j, j)];
        }
        m
    } else {
        z_ii.values() * &minus
    };
    let k = (&id + theta) * Complex64::new(z0.z0(), 0.0) + z_minus;
    let kinv = invert(&k, "Z0(I + Θ) + Z_II(I - Θ)")?;
    let w = minus * (kinv * &chan.tx_to_ris);
    Ok((chan.direct - chan.ris_to_rx.dot(&w)) / (2.0 * z0.z0()))
}

/// Impedance coupling with its inverse and admittance form, computed once
/// and shared across channel realisations.
#[derive(Debug, Clone)]
pub struct CouplingPair {
    pub z: CouplingMatrix,
    pub z_inv: CMatrix,
    pub y: CouplingMatrix,
}

impl CouplingPair {
    pub fn new(z_ii: CouplingMatrix) -> Result<Self> {
        check_coupling(&z_ii, Representation::Impedance)?;
        let z_inv = invert(z_ii.values(), "Z_II")?;
        let y = CouplingMatrix::new(
            (&z_inv + z_inv.transpose()) * Complex64::new(0.5, 0.0),
            Representation::Admittance,
        )?;
        Ok(Self { z: z_ii, z_inv, y })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Impedance-parameter channels and coupling to their admittance counterparts.
pub fn z_to_y(chan: &ChannelTriple, z_ii: &CouplingMatrix, z0: ReferenceImpedance) -> Result<(ChannelTriple, CouplingMatrix)> {
    let pair = CouplingPair::new(z_ii.clone())?;
    Ok((z_to_y_with(chan, &pair, z0)?, pair.y))
}

/// [`z_to_y`] for a precomputed [`CouplingPair`]; returns the channels only.
pub fn z_to_y_with(chan: &ChannelTriple, pair: &CouplingPair, z0: ReferenceImpedance) -> Result<ChannelTriple> {
    chan.expect(Representation::Impedance)?;
    check_dims(chan.len(), "coupling matrix", pair.len())?;
    let zinv = &pair.z_inv;
    let z0v = z0.z0();
    // Z_II^{-1} is symmetric, so z_RI Z_II^{-1} as a column is Z_II^{-1} z_RI^T.
    let y_ri = (zinv * &chan.ris_to_rx) * Complex64::new(-1.0 / z0v, 0.0);
    let y_it = (zinv * &chan.tx_to_ris) * Complex64::new(-1.0 / z0v, 0.0);
    let y_rt = (-chan.direct + bilinear(&chan.ris_to_rx, zinv, &chan.tx_to_ris)) / (z0v * z0v);
    ChannelTriple::new(y_rt, y_ri, y_it, Representation::Admittance)
}

/// Whitened channels `z_RI Re{Z_II}^{-1/2} sqrt(Z0)` and
/// `sqrt(Z0) Re{Z_II}^{-1/2} z_IT` (admittance analogue with `Y0`, `Y_II`).
pub fn effective_channels(chan: &ChannelTriple, coupling: &CouplingMatrix, z0: ReferenceImpedance) -> Result<ChannelTriple> {
    if chan.representation != coupling.representation() {
        return Err(Error::Representation {
            expected: chan.representation.name(),
            found: coupling.representation().name(),
        });
    }
    check_dims(chan.len(), "coupling matrix", coupling.len())?;
    let scale = Complex64::new(z0.reference(chan.representation).sqrt(), 0.0);
    let f = &coupling.real_factors().inv_sqrt;
    ChannelTriple::new(
        chan.direct,
        real_mul(f, &chan.ris_to_rx) * scale,
        real_mul(f, &chan.tx_to_ris) * scale,
        chan.representation,
    )
}

/// S-domain channels of an effective (whitened) triple; `theta` left unset.
pub fn to_scattering(eff: &ChannelTriple, z0: ReferenceImpedance) -> ScatteringState {
    let r0 = z0.reference(eff.representation);
    let cross = eff.ris_to_rx.dot(&eff.tx_to_ris) / (2.0 * r0);
    let (sign, s_rt) = match eff.representation {
        Representation::Impedance => (1.0, (eff.direct - cross) / (2.0 * r0)),
        Representation::Admittance => (-1.0, -(eff.direct - cross) / (2.0 * r0)),
    };
    let c = Complex64::new(sign / (2.0 * r0), 0.0);
    ScatteringState {
        s_rt,
        s_ri: &eff.ris_to_rx * c,
        s_it: &eff.tx_to_ris * c,
        theta: None,
    }
}

/// Reactance form `(jX + Z0 I)^{-1} (jX - Z0 I)`; susceptance form
/// `(Y0 I + jB)^{-1} (Y0 I - jB)`. Unitary and symmetric for real symmetric loads.
pub fn cayley(load: &LoadMatrix, z0: ReferenceImpedance) -> CMatrix {
    let n = load.len();
    let jl = to_complex(load.values()) * J;
    let id = CMatrix::identity(n, n);
    let (lhs, rhs) = match load.kind() {
        LoadKind::ReactanceX => {
            let r = Complex64::new(z0.z0(), 0.0);
            (&jl + &id * r, &jl - &id * r)
        }
        LoadKind::SusceptanceB => {
            let r = Complex64::new(z0.y0(), 0.0);
            (&id * r + &jl, &id * r - &jl)
        }
    };
    let theta = lhs
        .lu()
        .solve(&rhs)
        .expect("jL + r0 I is nonsingular for real symmetric L");
    (&theta + theta.transpose()) * Complex64::new(0.5, 0.0)
}

/// Distance of the eigenvalue of a unitary matrix closest to `point` (+1 or -1).
fn pole_distance(theta: &CMatrix, point: f64) -> f64 {
    let n = theta.nrows();
    let shifted = CMatrix::identity(n, n) * Complex64::new(point, 0.0) - theta;
    shifted.singular_values().min()
}

/// Inverse Cayley transform. Reactance form `-j Z0 (I + Θ)(I - Θ)^{-1}` has its
/// pole at eigenvalue +1; susceptance form `-j Y0 (I - Θ)(I + Θ)^{-1}` at -1.
pub fn cayley_inv(theta: &CMatrix, z0: ReferenceImpedance, kind: LoadKind) -> Result<LoadMatrix> {
    if !theta.is_square() || theta.nrows() == 0 {
        return Err(Error::Dimension("scattering matrix must be square and non-empty".into()));
    }
    let n = theta.nrows();
    let id = CMatrix::identity(n, n);
    let (pole, r0) = match kind {
        LoadKind::ReactanceX => (1.0, z0.z0()),
        LoadKind::SusceptanceB => (-1.0, z0.y0()),
    };
    let distance = pole_distance(theta, pole);
    if distance <= 1e-10 {
        return Err(Error::CayleyPole { distance });
    }
    let (num, den) = match kind {
        LoadKind::ReactanceX => (&id + theta, &id - theta),
        LoadKind::SusceptanceB => (&id - theta, &id + theta),
    };
    // num * den^{-1} = (den^T \ num^T)^T; num and den commute, so den \ num is equivalent.
    let ratio = den
        .lu()
        .solve(&num)
        .ok_or(Error::CayleyPole { distance })?;
    let load = ratio * Complex64::new(0.0, -r0);
    let re = load.map(|z| z.re);
    let im = load.map(|z| z.im);
    let scale = max_abs_real(&re).max(r0);
    if max_abs_real(&im) > 1e-9 * scale {
        return Err(Error::InvalidInput(format!(
            "scattering matrix is not unitary symmetric (imaginary load residue {:.3e})",
            max_abs_real(&im)
        )));
    }
    LoadMatrix::symmetric(kind, (&re + re.transpose()) * 0.5)
}

/// Physical load from its decoupled form:
/// `L = (1/r0) Re{M}^{1/2} L̄ Re{M}^{1/2} - Im{M}`.
pub fn recover_load(barred: &LoadMatrix, coupling: &CouplingMatrix, z0: ReferenceImpedance) -> Result<LoadMatrix> {
    let repr = barred.kind().representation();
    check_coupling(coupling, repr)?;
    check_dims(coupling.len(), "load matrix", barred.len())?;
    let r0 = z0.reference(repr);
    let s = &coupling.real_factors().sqrt;
    let l = (s * barred.values() * s) / r0 - coupling.imag_part();
    LoadMatrix::symmetric(barred.kind(), l)
}

/// Decoupled load `L̄ = r0 Re{M}^{-1/2} (L + Im{M}) Re{M}^{-1/2}`.
pub fn decouple_load(load: &LoadMatrix, coupling: &CouplingMatrix, z0: ReferenceImpedance) -> Result<LoadMatrix> {
    let repr = load.kind().representation();
    check_coupling(coupling, repr)?;
    check_dims(coupling.len(), "load matrix", load.len())?;
    let r0 = z0.reference(repr);
    let f = &coupling.real_factors().inv_sqrt;
    let l = (f * (load.values() + coupling.imag_part()) * f) * r0;
    LoadMatrix::symmetric(load.kind(), l)
}
