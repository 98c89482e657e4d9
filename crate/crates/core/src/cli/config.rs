use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{ControllerConfig, ModelErrorMixture, PendulumParams, Scenario};
use crate::dynamics::{ContractionKind, DisturbanceSignal};
use crate::error::{Error, Result};
use crate::ip::IpTarget;
use crate::regression::RegressionExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Regress,
    Pendulum,
    Dynamics,
    Ipcheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Regress => "regress",
            ExperimentKind::Pendulum => "pendulum",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::Ipcheck => "ipcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Plotdata,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

/// Target, radius and window lengths for an i.p. profile of an experiment trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpSpec {
    pub target: IpTarget,
    pub epsilon: f64,
    pub durations: Vec<usize>,
}

impl IpSpec {
    fn validate(&self) -> Result<()> {
        self.target.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("ip epsilon must be positive, got {}", self.epsilon)));
        }
        if self.durations.is_empty() || self.durations.contains(&0) {
            return Err(Error::Config("ip durations must be a nonempty list of positive integers".into()));
        }
        Ok(())
    }

    pub fn queries(&self) -> Vec<(f64, usize)> {
        self.durations.iter().map(|&d| (self.epsilon, d)).collect()
    }
}

fn regress_ip() -> IpSpec {
    IpSpec {
        target: IpTarget::Point(0.0),
        epsilon: 0.05,
        durations: vec![10],
    }
}

fn pendulum_ip() -> IpSpec {
    IpSpec {
        target: IpTarget::Interval(0.0),
        epsilon: 0.05,
        durations: vec![10, 100],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressSection {
    #[serde(default)]
    pub experiment: RegressionExperimentConfig,
    #[serde(default = "regress_ip")]
    pub ip: IpSpec,
    /// Grid size of the ground-truth/hypothesis curve dump.
    #[serde(default = "RegressSection::default_curve_points")]
    pub curve_points: usize,
}

impl RegressSection {
    fn default_curve_points() -> usize {
        201
    }
}

impl Default for RegressSection {
    fn default() -> Self {
        Self {
            experiment: RegressionExperimentConfig::default(),
            ip: regress_ip(),
            curve_points: Self::default_curve_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumSection {
    #[serde(default)]
    pub params: PendulumParams,
    #[serde(default)]
    pub mixture: ModelErrorMixture,
    #[serde(default)]
    pub controller: ControllerConfig,
    /// Scenarios to run; only `controller.scenario` when absent.
    #[serde(default)]
    pub scenarios: Option<Vec<Scenario>>,
    #[serde(default = "pendulum_ip")]
    pub ip: IpSpec,
    /// Radius of the classical tail check on `||e_t||`.
    #[serde(default = "PendulumSection::default_classical_epsilon")]
    pub classical_epsilon: f64,
}

impl PendulumSection {
    fn default_classical_epsilon() -> f64 {
        0.01
    }

    pub fn scenario_list(&self) -> Vec<Scenario> {
        self.scenarios
            .clone()
            .unwrap_or_else(|| vec![self.controller.scenario])
    }
}

impl Default for PendulumSection {
    fn default() -> Self {
        Self {
            params: PendulumParams::default(),
            mixture: ModelErrorMixture::default(),
            controller: ControllerConfig::default(),
            scenarios: None,
            ip: pendulum_ip(),
            classical_epsilon: Self::default_classical_epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `x_{t+1} = M x_t + d_t`.
    Linear { matrix: Vec<Vec<f64>> },
    /// `y_{t+1} = phi(y_t) + d_t`.
    Contraction { map: ContractionKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "DynamicsSection::default_system")]
    pub system: SystemSpec,
    #[serde(default = "DynamicsSection::default_disturbance")]
    pub disturbance: DisturbanceSignal,
    #[serde(default = "DynamicsSection::default_horizon")]
    pub horizon: usize,
    /// Zero vector when absent.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default = "DynamicsSection::default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "DynamicsSection::default_tail_tol")]
    pub tail_tol: f64,
}

impl DynamicsSection {
    fn default_system() -> SystemSpec {
        SystemSpec::Contraction {
            map: ContractionKind::Affine {
                slope: 0.5,
                offset: 1.0,
            },
        }
    }
    fn default_disturbance() -> DisturbanceSignal {
        DisturbanceSignal::IpVanishing {
            scale: 0.1,
            direction: None,
        }
    }
    fn default_horizon() -> usize {
        10_000
    }
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_tail_tol() -> f64 {
        1e-8
    }

    pub fn state_dim(&self) -> Result<usize> {
        match &self.system {
            SystemSpec::Linear { matrix } => Ok(matrix.len()),
            SystemSpec::Contraction { map } => Ok(map.build()?.fixed_point().len()),
        }
    }
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            system: Self::default_system(),
            disturbance: Self::default_disturbance(),
            horizon: Self::default_horizon(),
            initial_state: None,
            epsilon: Self::default_epsilon(),
            tail_tol: Self::default_tail_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpcheckSection {
    /// Single-column CSV with a header row.
    pub input: PathBuf,
    pub target: IpTarget,
    pub epsilon: f64,
    pub durations: Vec<usize>,
    /// Single start index; the logarithmic ladder when absent.
    #[serde(default)]
    pub start: Option<usize>,
}

/// Top-level experiment description, read from TOML (or JSON for resolved snapshots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    #[serde(default)]
    pub regress: Option<RegressSection>,
    #[serde(default)]
    pub pendulum: Option<PendulumSection>,
    #[serde(default)]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default)]
    pub ipcheck: Option<IpcheckSection>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: None,
            out: None,
            formats: default_formats(),
            regress: None,
            pendulum: None,
            dynamics: None,
            ipcheck: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `.json` files as JSON and everything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    /// Validates and fills every default so the snapshot replays verbatim.
    pub fn resolved(&self) -> Result<Self> {
        let mut out = Self::new(self.kind);
        out.seed = self.seed;
        out.out = self.out.clone();
        let mut formats = self.formats.clone();
        formats.sort();
        formats.dedup();
        out.formats = formats;

        let stray = [
            (ExperimentKind::Regress, self.regress.is_some()),
            (ExperimentKind::Pendulum, self.pendulum.is_some()),
            (ExperimentKind::Dynamics, self.dynamics.is_some()),
            (ExperimentKind::Ipcheck, self.ipcheck.is_some()),
        ]
        .into_iter()
        .find(|&(k, present)| present && k != self.kind);
        if let Some((k, _)) = stray {
            return Err(Error::Config(format!(
                "section [{}] does not apply to a {} experiment",
                k.name(),
                self.kind.name()
            )));
        }

        match self.kind {
            ExperimentKind::Regress => {
                if self.seed.is_none() {
                    return Err(Error::Config("regress experiments need a seed".into()));
                }
                let mut s = self.regress.clone().unwrap_or_default();
                s.experiment = s.experiment.resolved()?;
                s.ip.validate()?;
                out.regress = Some(s);
            }
            ExperimentKind::Pendulum => {
                let mut s = self.pendulum.clone().unwrap_or_default();
                s.params.validate()?;
                s.mixture.validate()?;
                s.ip.validate()?;
                if !(s.classical_epsilon > 0.0) {
                    return Err(Error::Config("classical_epsilon must be positive".into()));
                }
                let list = s.scenario_list();
                if list.is_empty() {
                    return Err(Error::Config("scenarios must not be empty".into()));
                }
                s.controller = s.controller.resolved(s.mixture.len())?;
                crate::control::error_matrix(&s.controller, &s.params)?;
                s.scenarios = Some(list);
                out.pendulum = Some(s);
            }
            ExperimentKind::Dynamics => {
                let mut s = self.dynamics.clone().unwrap_or_default();
                let n = s.state_dim().map_err(|e| Error::Config(e.to_string()))?;
                if s.horizon == 0 {
                    return Err(Error::Config("dynamics horizon must be >= 1".into()));
                }
                if !(s.epsilon > 0.0 && s.tail_tol > 0.0) {
                    return Err(Error::Config("epsilon and tail_tol must be positive".into()));
                }
                s.disturbance
                    .validate(n, s.horizon)
                    .map_err(|e| Error::Config(e.to_string()))?;
                match &s.initial_state {
                    Some(x) if x.len() != n => {
                        return Err(Error::Config(format!(
                            "initial_state has {} entries, system has dimension {n}",
                            x.len()
                        )))
                    }
                    Some(_) => {}
                    None => s.initial_state = Some(vec![0.0; n]),
                }
                out.dynamics = Some(s);
            }
            ExperimentKind::Ipcheck => {
                let s = self
                    .ipcheck
                    .clone()
                    .ok_or_else(|| Error::Config("ipcheck needs an input trace and a query".into()))?;
                IpSpec {
                    target: s.target,
                    epsilon: s.epsilon,
                    durations: s.durations.clone(),
                }
                .validate()?;
                if s.start == Some(0) {
                    return Err(Error::Config("start index is 1-based".into()));
                }
                out.ipcheck = Some(s);
            }
        }
        Ok(out)
    }
}
