//! Declarative experiment description, read from TOML.

use serde::{Deserialize, Serialize};

use crate::coupling::GeometryTemplate;
use crate::error::{Error, Result};
use crate::network::ReferenceImpedance;
use crate::optimizers::{Architecture, AscentOptions};
use crate::sampling::FadingSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SweepN,
    SweepSpacing,
    ScalingValidation,
    SingleInstance,
    SelfTest,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::SweepN => "sweep_n",
            ExperimentKind::SweepSpacing => "sweep_spacing",
            ExperimentKind::ScalingValidation => "scaling_validation",
            ExperimentKind::SingleInstance => "single_instance",
            ExperimentKind::SelfTest => "self_test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Awareness {
    /// Designed for and evaluated under the dipole coupling.
    Aware,
    /// Designed for `Z0 I`, evaluated under the dipole coupling.
    Unaware,
    /// No coupling at all: the self-impedance times `I` is the truth.
    NoCoupling,
}

impl Awareness {
    pub fn label(self) -> &'static str {
        match self {
            Awareness::Aware => "aware",
            Awareness::Unaware => "unaware",
            Awareness::NoCoupling => "no_coupling",
        }
    }
}

/// Default spacing grid (in wavelengths) of the spacing sweep.
pub const DEFAULT_SPACINGS: [f64; 7] = [0.5, 0.4, 0.33, 0.25, 0.2, 0.167, 0.125];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: ExperimentKind,
    pub geometry: GeometryTemplate,
    pub n_list: Vec<usize>,
    /// Inter-element spacings in wavelengths.
    pub spacing_list: Vec<f64>,
    pub fading: FadingSpec,
    pub trials: usize,
    pub seed: u64,
    pub architectures: Vec<Architecture>,
    pub awareness: Vec<Awareness>,
    pub z0: f64,
    /// Element self-impedance `[re, im]` in ohms; `[z0, 0]` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_impedance: Option<[f64; 2]>,
    /// Fill the `runtime_ms` column. Off by default so that reruns produce
    /// byte-identical files.
    pub record_timing: bool,
    pub ascent: AscentOptions,
}

impl ExperimentSpec {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let z0 = 50.0;
        let (n_list, spacing_list, trials, architectures, awareness) = match kind {
            ExperimentKind::SweepN => (
                vec![16, 24, 32, 40, 48, 56, 64],
                vec![0.5, 0.25],
                1000,
                vec![Architecture::FullyConnected, Architecture::TreeTridiagonal],
                vec![Awareness::Aware],
            ),
            ExperimentKind::SweepSpacing => (
                vec![64],
                DEFAULT_SPACINGS.to_vec(),
                1000,
                vec![Architecture::FullyConnected, Architecture::TreeTridiagonal, Architecture::Diagonal],
                vec![Awareness::Aware, Awareness::Unaware],
            ),
            ExperimentKind::ScalingValidation => (vec![16, 32, 64], vec![0.5, 0.25], 2000, vec![], vec![]),
            ExperimentKind::SingleInstance | ExperimentKind::SelfTest => (
                vec![16],
                vec![0.25],
                10,
                vec![Architecture::FullyConnected, Architecture::TreeTridiagonal, Architecture::Diagonal],
                vec![Awareness::Aware, Awareness::Unaware, Awareness::NoCoupling],
            ),
        };
        Self {
            id: kind.label().to_string(),
            kind,
            geometry: GeometryTemplate::default(),
            n_list,
            spacing_list,
            fading: FadingSpec::default_for(z0),
            trials,
            seed: 1,
            architectures,
            awareness,
            z0,
            self_impedance: None,
            record_timing: false,
            ascent: AscentOptions::default(),
        }
    }

    /// Parses a TOML document on top of the defaults of its kind. The kind is
    /// taken from the document, else from `kind_hint`. Nested tables merge
    /// key by key.
    pub fn from_toml_str(text: &str, kind_hint: Option<ExperimentKind>) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let kind = match user.get("kind") {
            Some(v) => v
                .clone()
                .try_into::<ExperimentKind>()
                .map_err(|e| Error::Config(format!("invalid `kind`: {e}")))?,
            None => kind_hint.ok_or_else(|| Error::Config("missing `kind`".into()))?,
        };
        let mut merged = toml::Table::try_from(Self::defaults(kind)).map_err(|e| Error::Config(format!("{e}")))?;
        for (key, value) in user {
            match (merged.get_mut(&key), value) {
                (Some(toml::Value::Table(base)), toml::Value::Table(over)) => base.extend(over),
                (_, value) => {
                    merged.insert(key, value);
                }
            }
        }
        let spec: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| Error::Config(format!("{e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn reference(&self) -> Result<ReferenceImpedance> {
        ReferenceImpedance::new(self.z0).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn self_impedance(&self) -> num_complex::Complex64 {
        let [re, im] = self.self_impedance.unwrap_or([self.z0, 0.0]);
        num_complex::Complex64::new(re, im)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return fail("`trials` must be at least 1".into());
        }
        if self.n_list.is_empty() || self.spacing_list.is_empty() {
            return fail("`n_list` and `spacing_list` must be non-empty".into());
        }
        for &n in &self.n_list {
            if n == 0 || (n >= self.geometry.n_x && n % self.geometry.n_x != 0) {
                return fail(format!(
                    "n = {n} is not a positive multiple of n_x = {} (arrays smaller than n_x use one row)",
                    self.geometry.n_x
                ));
            }
        }
        if self.spacing_list.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return fail("spacings must be positive".into());
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return fail(format!("z0 must be positive, got {}", self.z0));
        }
        if self.self_impedance().re <= 0.0 {
            return fail("self-impedance must have a positive real part".into());
        }
        self.fading.validate().map_err(|e| Error::Config(e.to_string()))?;
        if matches!(self.kind, ExperimentKind::SweepN | ExperimentKind::SweepSpacing)
            && (self.architectures.is_empty() || self.awareness.is_empty())
        {
            return fail("`architectures` and `awareness` must be non-empty".into());
        }
        if self.kind == ExperimentKind::ScalingValidation && self.trials < 100 {
            return fail("scaling validation needs at least 100 trials".into());
        }
        if self.ascent.grid == 0 {
            return fail("ascent grid must be positive".into());
        }
        Ok(())
    }
}
