use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Free-space wave impedance in ohms, kept to six significant digits.
pub const ETA0: f64 = 376.730;

/// Uniform planar array of thin-wire dipoles oriented along `y`.
///
/// Element `n` sits at `x = (n mod n_x) * spacing`, `y = (n / n_x) * spacing`
/// (row-major, `x` fastest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleArrayGeometry {
    pub n_x: usize,
    pub n_y: usize,
    /// Inter-element distance in meters.
    pub spacing: f64,
    /// Dipole length in meters.
    pub dipole_length: f64,
    /// Wire radius in meters.
    pub wire_radius: f64,
    /// Carrier frequency in Hz.
    pub frequency: f64,
}

impl DipoleArrayGeometry {
    pub fn new(
        n_x: usize,
        n_y: usize,
        spacing: f64,
        dipole_length: f64,
        wire_radius: f64,
        frequency: f64,
    ) -> Result<Self> {
        let g = Self {
            n_x,
            n_y,
            spacing,
            dipole_length,
            wire_radius,
            frequency,
        };
        g.validate()?;
        Ok(g)
    }

    /// 28 GHz quarter-wave dipoles of radius `lambda/500`, 8 columns (or a
    /// single row when `n < 8`), spacing given in wavelengths.
    pub fn standard(n: usize, spacing_wavelengths: f64) -> Result<Self> {
        Self::with_template(n, spacing_wavelengths, &GeometryTemplate::default())
    }

    pub fn with_template(n: usize, spacing_wavelengths: f64, t: &GeometryTemplate) -> Result<Self> {
        if n == 0 {
            return Err(Error::Geometry("array must have at least one element".into()));
        }
        let n_x = t.n_x.min(n);
        if !n.is_multiple_of(n_x) {
            return Err(Error::Geometry(format!(
                "{n} elements cannot be laid out in rows of {n_x}"
            )));
        }
        let lambda = SPEED_OF_LIGHT / t.frequency;
        Self::new(
            n_x,
            n / n_x,
            spacing_wavelengths * lambda,
            t.dipole_length_wavelengths * lambda,
            t.wire_radius_wavelengths * lambda,
            t.frequency,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Geometry(m.to_string()));
        if self.n_x == 0 || self.n_y == 0 {
            return bad("n_x and n_y must be at least 1");
        }
        let finite = [self.spacing, self.dipole_length, self.wire_radius, self.frequency]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return bad("geometry parameters must be finite");
        }
        if self.spacing <= 0.0 {
            return bad("spacing must be positive");
        }
        if self.frequency <= 0.0 {
            return bad("frequency must be positive");
        }
        if self.wire_radius <= 0.0 || self.wire_radius >= 0.1 * self.dipole_length {
            return bad("wire radius must satisfy 0 < r < dipole_length / 10");
        }
        if self.dipole_length >= self.wavelength() {
            return bad("dipole length must be shorter than a wavelength");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength()
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing / self.wavelength()
    }

    /// Grid coordinates `(column, row)` of element `index`.
    pub fn grid_index(&self, index: usize) -> (usize, usize) {
        (index % self.n_x, index / self.n_x)
    }

    pub fn position(&self, index: usize) -> (f64, f64) {
        let (c, r) = self.grid_index(index);
        (c as f64 * self.spacing, r as f64 * self.spacing)
    }
}

/// Frequency and element shape shared by every array in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryTemplate {
    pub n_x: usize,
    pub frequency: f64,
    pub dipole_length_wavelengths: f64,
    pub wire_radius_wavelengths: f64,
}

impl Default for GeometryTemplate {
    fn default() -> Self {
        Self {
            n_x: 8,
            frequency: 28e9,
            dipole_length_wavelengths: 0.25,
            wire_radius_wavelengths: 1.0 / 500.0,
        }
    }
}
