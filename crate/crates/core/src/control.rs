//! Model-reference adaptive control of an Euler-discretized pendulum.
//!
//! The plant is `x'' = f(x) + a(x) + b u` with known drift `a`, known input
//! gain `b` and an unknown model error `f`. The controller feedback-linearizes
//! with an estimate `f_hat` so the closed loop follows the reference system
//! `x_ref'' = K (xi - x_ref)`. With `e = x_ref - x` the discrete error obeys
//! `e_{t+1} = M e_t - d_t e_2` where `d_t = tau (f(x_t) - f_hat(x_t))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::spectral_radius;
use crate::error::{check_dim, Error, Result};
use crate::export::CsvTable;
use crate::geometry::{dot, euclidean_norm, FeasibleSet};
use crate::ip::SequenceTrace;
use crate::ocp::OcpState;

/// States with a coordinate beyond this magnitude abort the run.
const BLOW_UP: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumParams {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    /// Constant viscous friction coefficient.
    pub friction: f64,
    /// Euler step in seconds.
    pub tau: f64,
    /// Number of simulated steps.
    pub horizon: usize,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            friction: 0.1,
            tau: 0.01,
            horizon: 3000,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("length", self.length),
            ("gravity", self.gravity),
            ("tau", self.tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.friction.is_finite() {
            return Err(Error::Config("friction must be finite".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// Input gain `b = 1 / (m l^2)`.
    pub fn input_gain(&self) -> f64 {
        1.0 / (self.mass * self.length * self.length)
    }
}

/// Known drift `a(x) = -(g/l) sin(x_1) - friction / (m l^2) x_2`.
pub fn drift_a(params: &PendulumParams, x: &[f64; 2]) -> f64 {
    -(params.gravity / params.length) * x[0].sin()
        - params.friction / (params.mass * params.length * params.length) * x[1]
}

/// `f(x) = sum_i w_i exp(sign |x_1 - c_i| / s_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelErrorMixture {
    pub weights: Vec<f64>,
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    /// -1 for decaying kernels, +1 for the growing form.
    pub exponent_sign: f64,
}

impl Default for ModelErrorMixture {
    fn default() -> Self {
        Self {
            weights: vec![-12.0, -10.0, 10.0, 12.0],
            centers: vec![-PI / 2.0, 0.0, PI / 2.0, PI],
            scales: vec![1.0, 1.0, 0.5, 0.5],
            exponent_sign: -1.0,
        }
    }
}

impl ModelErrorMixture {
    pub fn validate(&self) -> Result<()> {
        let n = self.weights.len();
        if n == 0 || self.centers.len() != n || self.scales.len() != n {
            return Err(Error::Config(
                "mixture weights, centers and scales must have equal nonzero lengths".into(),
            ));
        }
        if self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config("mixture scales must be positive".into()));
        }
        if self.exponent_sign != 1.0 && self.exponent_sign != -1.0 {
            return Err(Error::Config(format!(
                "exponent_sign must be -1 or +1, got {}",
                self.exponent_sign
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Kernel values `phi_i(x)`; the adaptive predictor uses exactly these features.
    pub fn features(&self, x: &[f64; 2]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| (self.exponent_sign * (x[0] - c).abs() / s).exp())
            .collect()
    }

    pub fn value(&self, x: &[f64; 2]) -> f64 {
        dot(&self.weights, &self.features(x))
    }
}

pub fn model_error_f(mix: &ModelErrorMixture, x: &[f64; 2]) -> f64 {
    mix.value(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The controller cancels the exact model error.
    TrueModel,
    /// The controller assumes no model error.
    ZeroModel,
    /// The model error is learned online with Greedy Projection.
    GpAdaptive,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::TrueModel, Scenario::ZeroModel, Scenario::GpAdaptive];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TrueModel => "true_model",
            Scenario::ZeroModel => "zero_model",
            Scenario::GpAdaptive => "gp_adaptive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "true_model" | "true" => Ok(Scenario::TrueModel),
            "zero_model" | "zero" => Ok(Scenario::ZeroModel),
            "gp_adaptive" | "adaptive" => Ok(Scenario::GpAdaptive),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }
}

fn default_target() -> [f64; 2] {
    [PI, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default = "ControllerConfig::default_kp")]
    pub kp: f64,
    #[serde(default = "ControllerConfig::default_kd")]
    pub kd: f64,
    #[serde(default = "default_target")]
    pub target: [f64; 2],
    #[serde(default = "ControllerConfig::default_scenario")]
    pub scenario: Scenario,
    /// Parameter set for the learned weights; the box [-20, 20]^n when absent.
    #[serde(default)]
    pub feasible_set: Option<FeasibleSet>,
    #[serde(default = "ControllerConfig::default_eta0")]
    pub eta0: f64,
    /// Initial weights; zeros when absent.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_state: [f64; 2],
    /// Use `-K (xi - x)` inside the control law instead of `+K (xi - x)`.
    #[serde(default)]
    pub literal_feedback_sign: bool,
}

impl ControllerConfig {
    fn default_kp() -> f64 {
        4.0
    }
    fn default_kd() -> f64 {
        2.0
    }
    fn default_scenario() -> Scenario {
        Scenario::GpAdaptive
    }
    fn default_eta0() -> f64 {
        0.5
    }

    pub fn with_scenario(&self, scenario: Scenario) -> Self {
        Self {
            scenario,
            ..self.clone()
        }
    }

    fn feedback_sign(&self) -> f64 {
        if self.literal_feedback_sign {
            -1.0
        } else {
            1.0
        }
    }

    pub fn resolved_feasible_set(&self, n: usize) -> Result<FeasibleSet> {
        match &self.feasible_set {
            Some(s) => {
                if s.dimension() != n {
                    return Err(Error::Config(format!(
                        "controller feasible set has dimension {}, mixture has {n} kernels",
                        s.dimension()
                    )));
                }
                Ok(s.clone())
            }
            None => FeasibleSet::cube(n, -20.0, 20.0),
        }
    }

    pub fn resolved_theta0(&self, n: usize) -> Result<Vec<f64>> {
        match &self.theta0 {
            Some(t) => {
                check_dim(n, t.len()).map_err(|e| Error::Config(format!("theta0: {e}")))?;
                Ok(t.clone())
            }
            None => Ok(vec![0.0; n]),
        }
    }

    /// Materializes defaults for a mixture with `n` kernels.
    pub fn resolved(&self, n: usize) -> Result<Self> {
        Ok(Self {
            feasible_set: Some(self.resolved_feasible_set(n)?),
            theta0: Some(self.resolved_theta0(n)?),
            ..self.clone()
        })
    }
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kp: Self::default_kp(),
            kd: Self::default_kd(),
            target: default_target(),
            scenario: Self::default_scenario(),
            feasible_set: None,
            eta0: Self::default_eta0(),
            theta0: None,
            initial_state: [0.0, 0.0],
            literal_feedback_sign: false,
        }
    }
}

/// What the controller believes the model error to be.
#[derive(Debug, Clone, Copy)]
pub enum ModelEstimate<'a> {
    Exact(&'a ModelErrorMixture),
    Zero,
    Learned {
        mixture: &'a ModelErrorMixture,
        theta: &'a [f64],
    },
}

impl ModelEstimate<'_> {
    pub fn value(&self, x: &[f64; 2]) -> f64 {
        match self {
            ModelEstimate::Exact(mix) => mix.value(x),
            ModelEstimate::Zero => 0.0,
            ModelEstimate::Learned { mixture, theta } => dot(theta, &mixture.features(x)),
        }
    }
}

/// `u = b^-1 (-a(x) - f_hat(x) + K (xi - x))`.
pub fn control_u(
    params: &PendulumParams,
    config: &ControllerConfig,
    estimate: &ModelEstimate<'_>,
    x: &[f64; 2],
) -> f64 {
    let feedback = config.kp * (config.target[0] - x[0]) + config.kd * (config.target[1] - x[1]);
    (-drift_a(params, x) - estimate.value(x) + config.feedback_sign() * feedback) / params.input_gain()
}

/// Realized acceleration `f(x) + a(x) + b u`.
pub fn plant_acceleration(params: &PendulumParams, mix: &ModelErrorMixture, x: &[f64; 2], u: f64) -> f64 {
    mix.value(x) + drift_a(params, x) + params.input_gain() * u
}

fn euler(tau: f64, x: &[f64; 2], accel: f64) -> [f64; 2] {
    [x[0] + tau * x[1], x[1] + tau * accel]
}

pub fn step_plant(
    params: &PendulumParams,
    mix: &ModelErrorMixture,
    x: &[f64; 2],
    u: f64,
) -> Result<[f64; 2]> {
    let next = euler(params.tau, x, plant_acceleration(params, mix, x, u));
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite(
            format!("plant state from x = {x:?}, u = {u}"),
            None,
        ));
    }
    Ok(next)
}

pub fn step_reference(config: &ControllerConfig, params: &PendulumParams, x_ref: &[f64; 2]) -> [f64; 2] {
    let accel = config.kp * (config.target[0] - x_ref[0]) + config.kd * (config.target[1] - x_ref[1]);
    euler(params.tau, x_ref, accel)
}

/// `M = [[1, tau], [-tau k_p, 1 - tau k_d]]`, rejected unless `rho(M) < 1`.
pub fn error_matrix(config: &ControllerConfig, params: &PendulumParams) -> Result<DMatrix<f64>> {
    let tau = params.tau;
    let m = DMatrix::from_row_slice(2, 2, &[1.0, tau, -tau * config.kp, 1.0 - tau * config.kd]);
    let rho = spectral_radius(&m)?;
    if rho >= 1.0 {
        return Err(Error::Config(format!(
            "error dynamics unstable for K = ({}, {}), tau = {}: spectral radius {rho}",
            config.kp, config.kd, tau
        )));
    }
    Ok(m)
}

/// Residual `f_hat(x) - (x'' - a(x) - b u)`, squared loss, and its gradient `2 r phi(x)`.
pub fn learning_feedback(
    mix: &ModelErrorMixture,
    theta: &[f64],
    params: &PendulumParams,
    x: &[f64; 2],
    accel_observed: f64,
    u: f64,
) -> Result<(f64, Vec<f64>)> {
    check_dim(mix.len(), theta.len())?;
    let phi = mix.features(x);
    let observed_f = accel_observed - drift_a(params, x) - params.input_gain() * u;
    let residual = dot(theta, &phi) - observed_f;
    let grad = phi.iter().map(|p| 2.0 * residual * p).collect();
    Ok((residual * residual, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub x: [f64; 2],
    pub x_ref: [f64; 2],
    pub e: [f64; 2],
    pub u: f64,
    pub theta: Vec<f64>,
    pub loss: f64,
    /// `tau (f(x_t) - f_hat(x_t))`; enters the error recurrence along `(0, -1)`.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTraceBundle {
    pub scenario: Scenario,
    pub params: PendulumParams,
    pub mixture: ModelErrorMixture,
    pub config: ControllerConfig,
    pub records: Vec<ControlRecord>,
}

impl ControlTraceBundle {
    pub fn error_norms(&self) -> SequenceTrace {
        SequenceTrace::new(self.records.iter().map(|r| euclidean_norm(&r.e)).collect())
            .expect("finite by construction")
    }

    /// `||xi - x_t||` per step.
    pub fn tracking_distances(&self) -> Vec<f64> {
        let xi = self.config.target;
        self.records
            .iter()
            .map(|r| euclidean_norm(&[xi[0] - r.x[0], xi[1] - r.x[1]]))
            .collect()
    }

    fn last_quarter<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        let n = v.len();
        &v[n - n.div_ceil(4)..]
    }

    pub fn last_quarter_mean_error(&self) -> f64 {
        let e = self.error_norms().into_values();
        let tail = self.last_quarter(&e);
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn last_quarter_max_tracking(&self) -> f64 {
        let d = self.tracking_distances();
        self.last_quarter(&d).iter().fold(0.0, |a, &b| a.max(b))
    }

    /// Columns `t, x_1, x_2, x_ref_1, x_ref_2, e_1, e_2, norm_e, u, loss, theta_1..`.
    pub fn to_csv(&self) -> String {
        let n = self.mixture.len();
        let mut header: Vec<String> = ["t", "x_1", "x_2", "x_ref_1", "x_ref_2", "e_1", "e_2", "norm_e", "u", "loss"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=n).map(|i| format!("theta_{i}")));
        let mut table = CsvTable::new(&header);
        for (t, r) in self.records.iter().enumerate() {
            let row = [
                r.x[0],
                r.x[1],
                r.x_ref[0],
                r.x_ref[1],
                r.e[0],
                r.e[1],
                euclidean_norm(&r.e),
                r.u,
                r.loss,
            ];
            table.push_row(t, row.into_iter().chain(r.theta.iter().copied()));
        }
        table.finish()
    }
}

fn check_state(what: &str, x: &[f64; 2], stage: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite() && v.abs() < BLOW_UP) {
        Ok(())
    } else {
        Err(Error::non_finite(format!("{what} blew up: {x:?}"), Some(stage)))
    }
}

/// Closed-loop run over `params.horizon` steps from `config.initial_state`.
pub fn run_pendulum_experiment(
    params: &PendulumParams,
    mix: &ModelErrorMixture,
    config: &ControllerConfig,
) -> Result<ControlTraceBundle> {
    params.validate()?;
    mix.validate()?;
    error_matrix(config, params)?;
    let n = mix.len();
    let config = config.resolved(n)?;
    let set = config.resolved_feasible_set(n)?;
    let mut learner = OcpState::new(config.resolved_theta0(n)?, config.eta0, set)?;

    let mut x = config.initial_state;
    let mut x_ref = config.initial_state;
    let mut records = Vec::with_capacity(params.horizon);
    for t in 0..params.horizon {
        let e = [x_ref[0] - x[0], x_ref[1] - x[1]];
        let theta = learner.action().to_vec();
        let estimate = match config.scenario {
            Scenario::TrueModel => ModelEstimate::Exact(mix),
            Scenario::ZeroModel => ModelEstimate::Zero,
            Scenario::GpAdaptive => ModelEstimate::Learned {
                mixture: mix,
                theta: &theta,
            },
        };
        let f_true = mix.value(&x);
        let f_hat = estimate.value(&x);
        let u = control_u(params, &config, &estimate, &x);
        let accel = plant_acceleration(params, mix, &x, u);
        let x_next = euler(params.tau, &x, accel);
        check_state("plant state", &x_next, t + 1)?;

        let (loss, grad) = learning_feedback(mix, &theta, params, &x, accel, u)?;
        let loss = match config.scenario {
            Scenario::GpAdaptive => {
                learner.advance(&grad)?;
                loss
            }
            _ => (f_true - f_hat) * (f_true - f_hat),
        };
        records.push(ControlRecord {
            x,
            x_ref,
            e,
            u,
            theta,
            loss,
            d: params.tau * (f_true - f_hat),
        });
        x = x_next;
        x_ref = step_reference(&config, params, &x_ref);
        check_state("reference state", &x_ref, t + 1)?;
    }
    Ok(ControlTraceBundle {
        scenario: config.scenario,
        params: params.clone(),
        mixture: mix.clone(),
        config,
        records,
    })
}

/// Largest per-step deviation of `e_{t+1}` from `M e_t - d_t (0, 1)`.
pub fn recurrence_residual(bundle: &ControlTraceBundle) -> Result<f64> {
    let m = error_matrix(&bundle.config, &bundle.params)?;
    let mut worst = 0.0f64;
    for pair in bundle.records.windows(2) {
        let predicted = &m * DVector::from_column_slice(&pair[0].e)
            - DVector::from_column_slice(&[0.0, pair[0].d]);
        let actual = DVector::from_column_slice(&pair[1].e);
        worst = worst.max((actual - predicted).amax());
    }
    Ok(worst)
}

/// Upper bound on `sup_x |f(x) - f_hat(x)|` over the feasible weights, when the kernels are bounded.
pub fn model_error_sup_bound(mix: &ModelErrorMixture, set: &FeasibleSet) -> Option<f64> {
    if mix.exponent_sign > 0.0 {
        return None;
    }
    let true_part: f64 = mix.weights.iter().map(|w| w.abs()).sum();
    let learned_part = match set {
        FeasibleSet::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| l.abs().max(u.abs()))
            .sum::<f64>(),
        FeasibleSet::Ball { center, radius } => {
            center.iter().map(|c| c.abs()).sum::<f64>() + radius * (center.len() as f64).sqrt()
        }
    };
    Some(true_part + learned_part)
}
