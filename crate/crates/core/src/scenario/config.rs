//! Scenario description, read from TOML.
//!
//! ```toml
//! name = "two-emitters"
//! t0 = 15.0
//! t_end = 30.0
//!
//! [geometry]
//! positions = [-0.125, 0.125]   # units of the wavelength
//!
//! [target]
//! kind = "symmetric"
//!
//! [sampling]
//! kind = "coarse"
//! n = 20
//! extent = [-2.5, 2.5]
//!
//! [[checks]]
//! metric = "peak_fidelity"
//! min = 0.98
//! ```

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{HistoryPolicy, RamanPulse};
use crate::error::{Error, Result};
use crate::metrics::NoiseSpec;
use crate::model::{
    build_emitter_array, dicke_target, timed_dicke_target, EmitterArray, PhysicalParams, SpectralGrid, TargetState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub geometry: Geometry,
    pub target: TargetSpec,
    /// Time at which the target state should be reached.
    pub t0: f64,
    pub t_end: f64,
    #[serde(default)]
    pub gamma_free: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman: Option<RamanPulse>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Emitter positions in wavelengths.
    pub positions: Vec<f64>,
    /// Wavelength in units of v_g/Γ.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    PhysicalParams::default().lambda
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// All amplitudes equal.
    Symmetric,
    /// a_j = −a_{N+1−j}; needs an even number of emitters.
    Antisymmetric,
    /// a_j ∝ e^{i k_a r_j}.
    TimedDicke,
    /// Amplitudes as [re, im] pairs, normalized on load.
    Explicit { amplitudes: Vec<[f64; 2]> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 10.0, n_points: 2001 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    #[default]
    None,
    Coarse {
        n: usize,
        extent: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    #[serde(default = "yes")]
    pub retardation: bool,
    #[serde(default)]
    pub history: HistoryPolicy,
}

fn yes() -> bool {
    true
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self { dt: 1e-3, retardation: true, history: HistoryPolicy::Zero }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for this scenario's files, relative to the run's output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Half-width of the grid the outgoing photon is sampled on.
    #[serde(default = "default_output_width")]
    pub spectrum_half_width: f64,
}

fn default_output_width() -> f64 {
    40.0
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, spectrum_half_width: default_output_width() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum Metric {
    PeakFidelity,
    FidelityAtT0,
    ConcurrenceAtT0,
    /// Emitter index counts from 1.
    ReAmplitudeAtT0 {
        emitter: usize,
    },
    ImAmplitudeAtT0 {
        emitter: usize,
    },
    /// Smallest fidelity of the c amplitudes at t ≥ `after`.
    MinStorageFidelityAfter {
        after: f64,
    },
    /// Largest fidelity of the a amplitudes at t ≥ `after`.
    MaxFidelityAfter {
        after: f64,
    },
    /// Photon number in the stronger input branch over the weaker one.
    BranchRatio,
    McMeanPeakFidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    #[serde(flatten)]
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Check {
    pub fn range(metric: Metric, min: f64, max: f64) -> Self {
        Self { metric, min: Some(min), max: Some(max) }
    }

    pub fn at_least(metric: Metric, min: f64) -> Self {
        Self { metric, min: Some(min), max: None }
    }

    pub fn at_most(metric: Metric, max: f64) -> Self {
        Self { metric, min: None, max: Some(max) }
    }

    pub fn accepts(&self, value: f64) -> bool {
        value.is_finite() && self.min.is_none_or(|m| value >= m) && self.max.is_none_or(|m| value <= m)
    }
}

impl Metric {
    pub fn label(&self) -> String {
        match self {
            Metric::PeakFidelity => "peak_fidelity".into(),
            Metric::FidelityAtT0 => "fidelity_at_t0".into(),
            Metric::ConcurrenceAtT0 => "concurrence_at_t0".into(),
            Metric::ReAmplitudeAtT0 { emitter } => format!("re_a{emitter}_at_t0"),
            Metric::ImAmplitudeAtT0 { emitter } => format!("im_a{emitter}_at_t0"),
            Metric::MinStorageFidelityAfter { after } => format!("min_storage_fidelity_after_{after}"),
            Metric::MaxFidelityAfter { after } => format!("max_fidelity_after_{after}"),
            Metric::BranchRatio => "branch_ratio".into(),
            Metric::McMeanPeakFidelity => "mc_mean_peak_fidelity".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("scenario name {:?} is not a valid file name", self.name)));
        }
        if !(self.t_end > self.t0 && self.t0 >= 0.0) {
            return Err(Error::Config(format!("need 0 ≤ t0 < t_end, got t0 = {}, t_end = {}", self.t0, self.t_end)));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if let Sampling::Coarse { n, extent } = self.sampling {
            if n < 2 || !(extent[1] > extent[0]) {
                return Err(Error::Config("coarse sampling needs n ≥ 2 and an increasing extent".into()));
            }
        }
        let array = self.array()?;
        self.target_state(&array)?;
        self.spectral_grid()?;
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(1.0, self.gamma_free, 1.0, self.geometry.lambda)
    }

    pub fn array(&self) -> Result<EmitterArray> {
        build_emitter_array(&self.geometry.positions, self.params()?)
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::symmetric(self.grid.half_width, self.grid.n_points)
    }

    pub fn target_state(&self, array: &EmitterArray) -> Result<TargetState> {
        let n = array.len();
        match &self.target {
            TargetSpec::Symmetric => dicke_target(n, &vec![1.0; n]),
            TargetSpec::Antisymmetric => {
                if !n.is_multiple_of(2) {
                    return Err(Error::Config("an antisymmetric target needs an even number of emitters".into()));
                }
                let signs: Vec<f64> = (0..n).map(|j| if j < n / 2 { 1.0 } else { -1.0 }).collect();
                dicke_target(n, &signs)
            }
            TargetSpec::TimedDicke => timed_dicke_target(array),
            TargetSpec::Explicit { amplitudes } => {
                if amplitudes.len() != n {
                    return Err(Error::Length { expected: n, got: amplitudes.len() });
                }
                TargetState::new(amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
name = "pair"
t0 = 15.0
t_end = 30.0
gamma_free = 0.2

[geometry]
positions = [-0.125, 0.125]

[target]
kind = "explicit"
amplitudes = [[1.0, 0.0], [0.0, 1.0]]

[sampling]
kind = "coarse"
n = 20
extent = [-2.5, 2.5]

[noise]
spectrum_rel = 0.1
position_rel = 0.1
seed = 3
trials = 8

[raman]
t_pi = 10.0
delta = 0.1

[[checks]]
metric = "peak_fidelity"
min = 0.9

[[checks]]
metric = "re_amplitude_at_t0"
emitter = 2
min = 0.6
max = 0.8
"#;

    #[test]
    fn parses_full_example() {
        let c = ScenarioConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(c.geometry.lambda, 0.05);
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.sampling, Sampling::Coarse { n: 20, extent: [-2.5, 2.5] });
        assert_eq!(c.noise.unwrap().trials, 8);
        assert_eq!(c.checks.len(), 2);
        assert_eq!(c.checks[1].metric, Metric::ReAmplitudeAtT0 { emitter: 2 });
        let array = c.array().unwrap();
        let target = c.target_state(&array).unwrap();
        assert!((target.amps()[1] - C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::from_toml_str(EXAMPLE).unwrap();
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_time = EXAMPLE.replace("t_end = 30.0", "t_end = 5.0");
        assert!(ScenarioConfig::from_toml_str(&bad_time).is_err());
        let unknown = EXAMPLE.replace("gamma_free = 0.2", "gamma_free = 0.2\ncolour = 1");
        assert!(ScenarioConfig::from_toml_str(&unknown).is_err());
        let odd = EXAMPLE
            .replace("positions = [-0.125, 0.125]", "positions = [0.0, 0.25, 0.5]")
            .replace("kind = \"explicit\"\namplitudes = [[1.0, 0.0], [0.0, 1.0]]", "kind = \"antisymmetric\"");
        assert!(ScenarioConfig::from_toml_str(&odd).is_err());
    }

    #[test]
    fn check_ranges() {
        let c = Check::range(Metric::PeakFidelity, 0.5, 0.7);
        assert!(c.accepts(0.6) && !c.accepts(0.8) && !c.accepts(f64::NAN));
        assert!(Check::at_least(Metric::BranchRatio, 5.0).accepts(17.0));
        assert!(!Check::at_most(Metric::FidelityAtT0, 0.1).accepts(0.2));
    }
}
