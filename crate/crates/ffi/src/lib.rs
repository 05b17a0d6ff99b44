//! C ABI over the coupled-ris library.
//!
//! Every fallible entry point returns a [`CrisStatus`]; on failure the message
//! is available from [`cris_last_error`] on the same thread. Couplings are
//! opaque handles owned by the caller and released with [`cris_coupling_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coupled_ris::coupling::{build_coupling_matrix, CouplingMatrix, DipoleArrayGeometry, GeometryTemplate};
use coupled_ris::error::Error;
use coupled_ris::linalg::{CMatrix, CVector};
use coupled_ris::network::{ChannelTriple, CouplingPair, LoadKind, ReferenceImpedance, Representation};
use coupled_ris::optimizers::{assumed_coupling, optimize, upper_bound_fc, Architecture, AscentOptions};
use coupled_ris::sampling::FadingSpec;
use coupled_ris::scaling::{scaling_mc, scaling_nomc};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Singular = 4,
    NotPositiveDefinite = 5,
    Geometry = 6,
    Passivity = 7,
    /// Alignment, Cayley pole, quadrature or degenerate-channel failure.
    Numerical = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrisArchitecture {
    FullyConnected = 0,
    TreeTridiagonal = 1,
    Diagonal = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrisLoadKind {
    /// Ohms.
    Reactance = 0,
    /// Siemens.
    Susceptance = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrisComplex {
    pub re: f64,
    pub im: f64,
}

/// Array template for [`cris_coupling_from_dipoles`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrisGeometry {
    /// Elements per row; arrays smaller than this use a single row.
    pub n_x: usize,
    pub frequency_hz: f64,
    pub dipole_length_wl: f64,
    pub wire_radius_wl: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrisResult {
    /// `|h|²` under the handle's coupling.
    pub gain_linear: f64,
    /// `|h|²` under the coupling the load was designed for.
    pub design_gain: f64,
    /// Upper bound under the handle's coupling.
    pub bound_linear: f64,
    pub residual: f64,
    pub load_kind: CrisLoadKind,
    pub degenerate: bool,
}

/// Opaque coupling handle.
pub struct CrisCoupling {
    pair: CouplingPair,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CrisStatus {
    match e {
        Error::SingularSystem { .. } => CrisStatus::Singular,
        Error::Dimension(_) => CrisStatus::Dimension,
        Error::NotPositiveDefinite { .. } => CrisStatus::NotPositiveDefinite,
        Error::Geometry(_) => CrisStatus::Geometry,
        Error::Passivity { .. } => CrisStatus::Passivity,
        Error::CayleyPole { .. } | Error::Quadrature { .. } | Error::DegenerateChannel | Error::AlignmentInfeasible { .. } => {
            CrisStatus::Numerical
        }
        _ => CrisStatus::InvalidInput,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CrisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrisStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer: {name}"));
            CrisStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            CrisStatus::Panic
        }
    }
}

fn nonnull<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers that are either null or valid for reads.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: the caller guarantees `len` readable elements behind `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn write_out<T>(p: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

fn c(z: &CrisComplex) -> Complex64 {
    Complex64::new(z.re, z.im)
}

fn channel(n: usize, ris_to_rx: *const CrisComplex, tx_to_ris: *const CrisComplex, direct: CrisComplex) -> Result<ChannelTriple, Failure> {
    let ri = slice(ris_to_rx, n, "ris_to_rx")?;
    let it = slice(tx_to_ris, n, "tx_to_ris")?;
    Ok(ChannelTriple::new(
        c(&direct),
        CVector::from_iterator(n, ri.iter().map(c)),
        CVector::from_iterator(n, it.iter().map(c)),
        Representation::Impedance,
    )?)
}

fn boxed(z_ii: CouplingMatrix, out: *mut *mut CrisCoupling) -> Result<(), Failure> {
    let handle = Box::new(CrisCoupling {
        pair: CouplingPair::new(z_ii)?,
    });
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    // SAFETY: checked non-null above.
    unsafe { out.write(Box::into_raw(handle)) };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cris_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default array template (8 elements per row, 28 GHz, quarter-wave dipoles).
#[no_mangle]
pub extern "C" fn cris_geometry_default() -> CrisGeometry {
    let t = GeometryTemplate::default();
    CrisGeometry {
        n_x: t.n_x,
        frequency_hz: t.frequency,
        dipole_length_wl: t.dipole_length_wavelengths,
        wire_radius_wl: t.wire_radius_wavelengths,
    }
}

/// Builds the dipole coupling of `n` elements at `spacing_wl` wavelengths.
/// `geometry` may be NULL for the default template.
///
/// # Safety
/// `geometry` is NULL or points to a valid `CrisGeometry`; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_from_dipoles(
    n: usize,
    spacing_wl: f64,
    geometry: *const CrisGeometry,
    self_impedance: CrisComplex,
    out: *mut *mut CrisCoupling,
) -> CrisStatus {
    guard(|| {
        // SAFETY: NULL or valid per the contract.
        let g = unsafe { geometry.as_ref() }.copied().unwrap_or_else(|| cris_geometry_default());
        let template = GeometryTemplate {
            n_x: g.n_x,
            frequency: g.frequency_hz,
            dipole_length_wavelengths: g.dipole_length_wl,
            wire_radius_wavelengths: g.wire_radius_wl,
        };
        let geom = DipoleArrayGeometry::with_template(n, spacing_wl, &template)?;
        boxed(build_coupling_matrix(&geom, c(&self_impedance))?, out)
    })
}

/// Wraps a row-major `n × n` impedance matrix in ohms.
///
/// # Safety
/// `values` holds `n * n` readable entries; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_from_matrix(n: usize, values: *const CrisComplex, out: *mut *mut CrisCoupling) -> CrisStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| Error::Dimension("matrix size overflows".into()))?;
        let v = slice(values, len, "values")?;
        let m = CMatrix::from_row_iterator(n, n, v.iter().map(c));
        boxed(CouplingMatrix::new(m, Representation::Impedance)?, out)
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `handle` is NULL or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_free(handle: *mut CrisCoupling) {
    if !handle.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of elements, or 0 for NULL.
///
/// # Safety
/// `handle` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_size(handle: *const CrisCoupling) -> usize {
    // SAFETY: NULL or live per the contract.
    unsafe { handle.as_ref() }.map_or(0, |h| h.pair.len())
}

/// Copies the impedance matrix row-major into `out`, which has room for `len`
/// entries (at least `n * n`).
///
/// # Safety
/// `handle` is a live handle; `out` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_copy(handle: *const CrisCoupling, out: *mut CrisComplex, len: usize) -> CrisStatus {
    guard(|| {
        let h = nonnull(handle, "handle")?;
        let n = h.pair.len();
        if len < n * n {
            return Err(Error::Dimension(format!("output holds {len} entries, need {}", n * n)).into());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        // SAFETY: `len >= n * n` writable entries per the contract.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, n * n) };
        let v = h.pair.z.values();
        for i in 0..n {
            for j in 0..n {
                let z = v[(i, j)];
                dst[i * n + j] = CrisComplex { re: z.re, im: z.im };
            }
        }
        Ok(())
    })
}

/// Extreme eigenvalues of the real part of the coupling.
///
/// # Safety
/// `handle` is a live handle; the outputs are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_coupling_eigen_extremes(handle: *const CrisCoupling, lambda_min: *mut f64, lambda_max: *mut f64) -> CrisStatus {
    guard(|| {
        let f = nonnull(handle, "handle")?.pair.z.real_factors();
        write_out(lambda_min, f.lambda_min, "lambda_min")?;
        write_out(lambda_max, f.lambda_max, "lambda_max")
    })
}

/// Optimises the RIS for a channel of `handle.size()` elements. With
/// `aware == false` the load is designed for `z0 I` and evaluated under the
/// handle's coupling. `load_out` is NULL or has room for `n * n` values and
/// receives the load row-major.
///
/// # Safety
/// Channel arrays hold `n` entries; `result` is valid for writes; `load_out`
/// is NULL or valid for `n * n` writes.
#[no_mangle]
pub unsafe extern "C" fn cris_optimize(
    handle: *const CrisCoupling,
    n: usize,
    ris_to_rx: *const CrisComplex,
    tx_to_ris: *const CrisComplex,
    direct: CrisComplex,
    architecture: CrisArchitecture,
    aware: bool,
    z0: f64,
    load_out: *mut f64,
    result: *mut CrisResult,
) -> CrisStatus {
    guard(|| {
        let h = nonnull(handle, "handle")?;
        let z0 = ReferenceImpedance::new(z0)?;
        let chan = channel(n, ris_to_rx, tx_to_ris, direct)?;
        if h.pair.len() != n {
            return Err(Error::Dimension(format!("coupling has {} elements, channel {n}", h.pair.len())).into());
        }
        let architecture = match architecture {
            CrisArchitecture::FullyConnected => Architecture::FullyConnected,
            CrisArchitecture::TreeTridiagonal => Architecture::TreeTridiagonal,
            CrisArchitecture::Diagonal => Architecture::Diagonal,
        };
        let assumed = CouplingPair::new(assumed_coupling(n, z0)?)?;
        let (config, gain) = optimize(architecture, aware, &chan, &h.pair, &assumed, z0, &AscentOptions::default())?;
        let bound = upper_bound_fc(&chan, &h.pair.z, z0)?;
        if !load_out.is_null() {
            // SAFETY: room for `n * n` values per the contract.
            let dst = unsafe { std::slice::from_raw_parts_mut(load_out, n * n) };
            let v = config.load.values();
            for i in 0..n {
                for j in 0..n {
                    dst[i * n + j] = v[(i, j)];
                }
            }
        }
        let load_kind = match config.load.kind() {
            LoadKind::ReactanceX => CrisLoadKind::Reactance,
            LoadKind::SusceptanceB => CrisLoadKind::Susceptance,
        };
        write_out(
            result,
            CrisResult {
                gain_linear: gain,
                design_gain: config.achieved_gain,
                bound_linear: bound,
                residual: config.residual,
                load_kind,
                degenerate: config.degenerate,
            },
            "result",
        )
    })
}

/// Channel-gain upper bound of any BD-RIS under the handle's coupling.
///
/// # Safety
/// Channel arrays hold `n` entries; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_upper_bound(
    handle: *const CrisCoupling,
    n: usize,
    ris_to_rx: *const CrisComplex,
    tx_to_ris: *const CrisComplex,
    direct: CrisComplex,
    z0: f64,
    out: *mut f64,
) -> CrisStatus {
    guard(|| {
        let h = nonnull(handle, "handle")?;
        let chan = channel(n, ris_to_rx, tx_to_ris, direct)?;
        let bound = upper_bound_fc(&chan, &h.pair.z, ReferenceImpedance::new(z0)?)?;
        write_out(out, bound, "out")
    })
}

/// Average optimal gain under Rayleigh fading with the handle's coupling.
///
/// # Safety
/// `handle` is a live handle; `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_scaling_mc(handle: *const CrisCoupling, rho_ri: f64, rho_it: f64, z0: f64, out: *mut f64) -> CrisStatus {
    guard(|| {
        let h = nonnull(handle, "handle")?;
        let fading = FadingSpec::rayleigh(rho_ri, rho_it);
        fading.validate()?;
        write_out(out, scaling_mc(&fading, &h.pair.z, ReferenceImpedance::new(z0)?)?, "out")
    })
}

/// Average optimal gain under Rayleigh fading without coupling, for `n`
/// elements of self-resistance `r_self`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cris_scaling_nomc(n: usize, r_self: f64, rho_ri: f64, rho_it: f64, z0: f64, out: *mut f64) -> CrisStatus {
    guard(|| {
        let fading = FadingSpec::rayleigh(rho_ri, rho_it);
        fading.validate()?;
        write_out(out, scaling_nomc(&fading, r_self, n, ReferenceImpedance::new(z0)?)?, "out")
    })
}
