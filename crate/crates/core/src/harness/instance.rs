//! Single optimisation problems read from and written to JSON.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{build_coupling_matrix_with, CouplingMatrix, DipoleArrayGeometry, GeometryTemplate, QuadratureOptions};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::network::{ChannelTriple, CouplingPair, LoadKind, LoadPattern, ReferenceImpedance, Representation};
use crate::optimizers::{assumed_coupling, optimize, upper_bound_fc, Architecture, AscentOptions};

/// Complex number as `[re, im]`.
pub type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSource {
    /// Full `Z_II` in ohms, row-major.
    Matrix(Vec<Vec<Pair>>),
    /// Dipole array built from a template.
    Geometry {
        spacing_wl: f64,
        #[serde(default)]
        template: GeometryTemplate,
        /// `[re, im]` self-impedance; `[z0, 0]` when omitted.
        #[serde(default)]
        self_impedance: Option<Pair>,
    },
    /// `Z0 I`.
    Uncoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default = "default_z0")]
    pub z0: f64,
    #[serde(default)]
    pub direct: Pair,
    pub ris_to_rx: Vec<Pair>,
    pub tx_to_ris: Vec<Pair>,
    pub coupling: CouplingSource,
    pub architecture: Architecture,
    #[serde(default = "yes")]
    pub aware: bool,
    #[serde(default)]
    pub ascent: AscentOptions,
}

fn default_z0() -> f64 {
    50.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOutput {
    /// `reactance` or `susceptance`.
    pub kind: String,
    pub pattern: String,
    /// Ohms or siemens, row-major.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub n: usize,
    pub architecture: Architecture,
    pub aware: bool,
    pub load: LoadOutput,
    /// `|h|²` under the coupling the load was designed for.
    pub design_gain: f64,
    /// `|h|²` under the instance coupling.
    pub gain_linear: f64,
    pub gain_db: f64,
    /// Upper bound under the instance coupling.
    pub bound_linear: f64,
    pub residual: f64,
    pub alignment_error: Option<f64>,
    pub degenerate: bool,
}

fn to_c(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("instance: {e}")))
    }

    pub fn channel(&self) -> Result<ChannelTriple> {
        let ri = CVector::from_iterator(self.ris_to_rx.len(), self.ris_to_rx.iter().map(to_c));
        let it = CVector::from_iterator(self.tx_to_ris.len(), self.tx_to_ris.iter().map(to_c));
        ChannelTriple::new(to_c(&self.direct), ri, it, Representation::Impedance)
    }

    pub fn coupling_matrix(&self) -> Result<CouplingMatrix> {
        let n = self.ris_to_rx.len();
        let z0 = ReferenceImpedance::new(self.z0)?;
        match &self.coupling {
            CouplingSource::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension(format!("coupling matrix must be {n}x{n}")));
                }
                let values = CMatrix::from_fn(n, n, |i, j| to_c(&rows[i][j]));
                CouplingMatrix::new(values, Representation::Impedance)
            }
            CouplingSource::Geometry {
                spacing_wl,
                template,
                self_impedance,
            } => {
                let geom = DipoleArrayGeometry::with_template(n, *spacing_wl, template)?;
                let zs = self_impedance.map(|p| to_c(&p)).unwrap_or(Complex64::new(self.z0, 0.0));
                build_coupling_matrix_with(&geom, zs, &QuadratureOptions::default())
            }
            CouplingSource::Uncoupled => assumed_coupling(n, z0),
        }
    }

    pub fn solve(&self) -> Result<InstanceResult> {
        let z0 = ReferenceImpedance::new(self.z0)?;
        let chan = self.channel()?;
        let truth = CouplingPair::new(self.coupling_matrix()?)?;
        let assumed = CouplingPair::new(assumed_coupling(chan.len(), z0)?)?;
        let (config, gain) = optimize(self.architecture, self.aware, &chan, &truth, &assumed, z0, &self.ascent)?;
        let bound = upper_bound_fc(&chan, &truth.z, z0)?;
        Ok(InstanceResult {
            n: chan.len(),
            architecture: self.architecture,
            aware: self.aware,
            load: load_output(config.load.kind(), config.load.pattern(), config.load.values()),
            design_gain: config.achieved_gain,
            gain_linear: gain,
            gain_db: 10.0 * gain.log10(),
            bound_linear: bound,
            residual: config.residual,
            alignment_error: config.alignment_error,
            degenerate: config.degenerate,
        })
    }
}

fn load_output(kind: LoadKind, pattern: LoadPattern, values: &DMatrix<f64>) -> LoadOutput {
    LoadOutput {
        kind: match kind {
            LoadKind::ReactanceX => "reactance",
            LoadKind::SusceptanceB => "susceptance",
        }
        .into(),
        pattern: match pattern {
            LoadPattern::Full => "full",
            LoadPattern::Tridiagonal => "tridiagonal",
            LoadPattern::Diagonal => "diagonal",
        }
        .into(),
        values: values.row_iter().map(|r| r.iter().copied().collect()).collect(),
    }
}
