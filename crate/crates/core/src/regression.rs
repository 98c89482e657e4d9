//! Online regression with radial-basis-function networks.
//!
//! A predictor is `f_hat(x; theta) = <theta, phi(x)>` with Gaussian features
//! `phi_i(x) = exp(-||x - c_i||^2 / s_i^2)`. The weights are learned online by
//! Greedy Projection on the stage losses `||f_hat(x_t; theta) - y_t||^2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::export::CsvTable;
use crate::geometry::{dot, FeasibleSet};
use crate::ocp::{OcpState, RegretLedger};
use crate::rng::SeededStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfFeatureMap {
    centers: Vec<Vec<f64>>,
    length_scales: Vec<f64>,
}

impl RbfFeatureMap {
    /// Length scales only enter squared, so negative values are accepted.
    pub fn new(centers: Vec<Vec<f64>>, length_scales: Vec<f64>) -> Result<Self> {
        let map = Self {
            centers,
            length_scales,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::InvalidInput("feature map needs at least one center".into()));
        }
        check_dim(self.centers.len(), self.length_scales.len())?;
        let d = self.centers[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("centers must have dimension >= 1".into()));
        }
        for c in &self.centers {
            check_dim(d, c.len())?;
            check_finite("center", c, None)?;
        }
        if let Some(s) = self
            .length_scales
            .iter()
            .find(|s| !(s.abs() > 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidInput(format!(
                "length scales must be finite and nonzero, got {s}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        check_finite("input", x, None)?;
        Ok(self
            .centers
            .iter()
            .zip(&self.length_scales)
            .map(|(c, s)| {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (s * s)).exp()
            })
            .collect())
    }

    /// Map restricted to the listed feature indices, in the given order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&i) = keep.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidInput(format!(
                "feature index {i} out of range for {} features",
                self.len()
            )));
        }
        Self::new(
            keep.iter().map(|&i| self.centers[i].clone()).collect(),
            keep.iter().map(|&i| self.length_scales[i]).collect(),
        )
    }

    /// The four-unit map of the reference experiment: centers -1, -1/3, 1/3, 1.
    pub fn reference() -> Self {
        Self {
            centers: vec![vec![-1.0], vec![-1.0 / 3.0], vec![1.0 / 3.0], vec![1.0]],
            length_scales: vec![-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0],
        }
    }
}

/// `f_hat(x) = <theta_k, phi(x)>` per output `k`; weights are stored output-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfPredictor {
    features: RbfFeatureMap,
    weights: Vec<f64>,
}

impl RbfPredictor {
    pub fn new(features: RbfFeatureMap, weights: Vec<f64>) -> Result<Self> {
        let m = features.len();
        if weights.is_empty() || weights.len() % m != 0 {
            return Err(Error::Dimension {
                expected: m,
                got: weights.len(),
            });
        }
        check_finite("weights", &weights, None)?;
        Ok(Self { features, weights })
    }

    pub fn feature_map(&self) -> &RbfFeatureMap {
        &self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        check_dim(self.weights.len(), weights.len())?;
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        self.weights.len() / self.features.len()
    }

    fn predict_from(&self, phi: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(phi.len())
            .map(|theta| dot(theta, phi))
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict_from(&self.features.features(x)?))
    }

    pub fn stage_loss(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.outputs(), y.len())?;
        let pred = self.predict(x)?;
        Ok(pred.iter().zip(y).map(|(p, y)| (p - y) * (p - y)).sum())
    }

    /// Gradient of [`stage_loss`](Self::stage_loss) in the weights: `2 (f_hat - y) phi`.
    pub fn stage_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.gradient_impl(x, y, false)
    }

    /// The form `2 f_hat phi`, which drops the target; kept for comparison runs only.
    pub fn literal_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.gradient_impl(x, y, true)
    }

    fn gradient_impl(&self, x: &[f64], y: &[f64], literal: bool) -> Result<Vec<f64>> {
        check_dim(self.outputs(), y.len())?;
        let phi = self.features.features(x)?;
        let pred = self.predict_from(&phi);
        let mut grad = Vec::with_capacity(self.weights.len());
        for (p, y) in pred.iter().zip(y) {
            let r = if literal { *p } else { p - y };
            grad.extend(phi.iter().map(|f| 2.0 * r * f));
        }
        Ok(grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightInit {
    /// i.i.d. uniform on `[lower, upper]` per weight, drawn from the experiment stream.
    Uniform { lower: f64, upper: f64 },
    Fixed { values: Vec<f64> },
    Zeros,
    /// Start at the true weights (initial weights only).
    MatchTarget,
}

impl Default for WeightInit {
    fn default() -> Self {
        WeightInit::Uniform {
            lower: -1.0,
            upper: 1.0,
        }
    }
}

impl WeightInit {
    fn draw(&self, n: usize, stream: &mut SeededStream, target: Option<&[f64]>) -> Result<Vec<f64>> {
        match self {
            WeightInit::Uniform { lower, upper } => {
                if !(lower <= upper && lower.is_finite() && upper.is_finite()) {
                    return Err(Error::Config(format!(
                        "uniform weight bounds [{lower}, {upper}] are invalid"
                    )));
                }
                Ok(stream.uniform_vec(n, *lower, *upper))
            }
            WeightInit::Fixed { values } => {
                check_dim(n, values.len())?;
                Ok(values.clone())
            }
            WeightInit::Zeros => Ok(vec![0.0; n]),
            WeightInit::MatchTarget => match target {
                Some(t) if t.len() == n => Ok(t.to_vec()),
                Some(t) => Err(Error::Config(format!(
                    "initial weights cannot match a target of {} weights with {n} hypothesis features",
                    t.len()
                ))),
                None => Err(Error::Config("match_target is only valid for initial weights".into())),
            },
        }
    }
}

fn default_horizon() -> usize {
    100
}
fn default_eta0() -> f64 {
    1.0
}
fn default_input_lower() -> Vec<f64> {
    vec![-2.0]
}
fn default_input_upper() -> Vec<f64> {
    vec![2.0]
}

/// Online regression experiment. Every field has the reference-experiment default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionExperimentConfig {
    /// Feature map of the target `f(x) = <theta*, phi(x)>`.
    #[serde(default = "RbfFeatureMap::reference")]
    pub feature_map: RbfFeatureMap,
    /// Indices of target features the learner uses; all of them when absent.
    #[serde(default)]
    pub hypothesis_features: Option<Vec<usize>>,
    #[serde(default = "default_input_lower")]
    pub input_lower: Vec<f64>,
    #[serde(default = "default_input_upper")]
    pub input_upper: Vec<f64>,
    #[serde(default)]
    pub target_weights: WeightInit,
    #[serde(default)]
    pub initial_weights: WeightInit,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_eta0")]
    pub eta0: f64,
    /// Learning feasible set; the box [-10, 10]^m when absent.
    #[serde(default)]
    pub feasible_set: Option<FeasibleSet>,
    #[serde(default)]
    pub literal_gradient: bool,
}

impl Default for RegressionExperimentConfig {
    fn default() -> Self {
        Self {
            feature_map: RbfFeatureMap::reference(),
            hypothesis_features: None,
            input_lower: default_input_lower(),
            input_upper: default_input_upper(),
            target_weights: WeightInit::default(),
            initial_weights: WeightInit::default(),
            horizon: default_horizon(),
            eta0: default_eta0(),
            feasible_set: None,
            literal_gradient: false,
        }
    }
}

impl RegressionExperimentConfig {
    pub fn hypothesis_map(&self) -> Result<RbfFeatureMap> {
        match &self.hypothesis_features {
            Some(keep) => self.feature_map.subset(keep),
            None => Ok(self.feature_map.clone()),
        }
    }

    /// Materializes every default so the config can be replayed verbatim.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        let m = self.hypothesis_map()?.len();
        if out.hypothesis_features.is_none() {
            out.hypothesis_features = Some((0..self.feature_map.len()).collect());
        }
        if out.feasible_set.is_none() {
            out.feasible_set = Some(FeasibleSet::cube(m, -10.0, 10.0)?);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_map.validate().map_err(|e| Error::Config(e.to_string()))?;
        let d = self.feature_map.input_dim();
        if self.input_lower.len() != d || self.input_upper.len() != d {
            return Err(Error::Config(format!(
                "input box must have dimension {d} to match the centers"
            )));
        }
        if self
            .input_lower
            .iter()
            .zip(&self.input_upper)
            .any(|(lo, hi)| !(lo <= hi && lo.is_finite() && hi.is_finite()))
        {
            return Err(Error::Config("input box bounds must be finite with lower <= upper".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::Config(format!("eta0 must be finite and >= 0, got {}", self.eta0)));
        }
        let m = self.hypothesis_map().map_err(|e| Error::Config(e.to_string()))?.len();
        if let Some(set) = &self.feasible_set {
            if set.dimension() != m {
                return Err(Error::Config(format!(
                    "feasible set has dimension {} but the hypothesis has {m} weights",
                    set.dimension()
                )));
            }
        }
        Ok(())
    }

    fn feasible(&self, m: usize) -> Result<FeasibleSet> {
        match &self.feasible_set {
            Some(s) => Ok(s.clone()),
            None => FeasibleSet::cube(m, -10.0, 10.0),
        }
    }
}

/// One online stage: the input, the revealed target, the weights used to predict, and the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRecord {
    pub x: Vec<f64>,
    pub y: f64,
    pub theta: Vec<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct RegressionRun {
    pub target: RbfPredictor,
    pub hypothesis: RbfFeatureMap,
    pub records: Vec<RegressionRecord>,
    pub final_weights: Vec<f64>,
    pub ledger: RegretLedger,
    pub feasible_set: FeasibleSet,
}

impl RegressionRun {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn final_predictor(&self) -> RbfPredictor {
        RbfPredictor {
            features: self.hypothesis.clone(),
            weights: self.final_weights.clone(),
        }
    }

    /// Columns `stage, x_1..x_d, y, loss, theta_1..theta_m`.
    pub fn to_csv(&self) -> String {
        let d = self.hypothesis.input_dim();
        let m = self.hypothesis.len();
        let mut header = vec!["stage".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        header.push("y".into());
        header.push("loss".into());
        header.extend((1..=m).map(|i| format!("theta_{i}")));
        let mut table = CsvTable::new(&header);
        for (t, r) in self.records.iter().enumerate() {
            let row = r
                .x
                .iter()
                .copied()
                .chain([r.y, r.loss])
                .chain(r.theta.iter().copied());
            table.push_row(t + 1, row);
        }
        table.finish()
    }

    /// Ground truth and final hypothesis on a uniform grid over a 1-D input box.
    pub fn curve_rows(&self, lower: f64, upper: f64, points: usize) -> Result<Vec<Vec<f64>>> {
        if self.hypothesis.input_dim() != 1 {
            return Err(Error::InvalidInput("curve dumps need 1-D inputs".into()));
        }
        let fin = self.final_predictor();
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let x = lower + (upper - lower) * i as f64 / (n - 1) as f64;
                Ok(vec![x, self.target.predict(&[x])?[0], fin.predict(&[x])?[0]])
            })
            .collect()
    }
}

/// Runs predict, observe, gradient, Greedy Projection for `horizon` stages.
pub fn run_online_regression(config: &RegressionExperimentConfig, seed: u64) -> Result<RegressionRun> {
    config.validate()?;
    let hypothesis = config.hypothesis_map()?;
    let m = hypothesis.len();
    let mut stream = SeededStream::new(seed);

    let target_weights = config
        .target_weights
        .draw(config.feature_map.len(), &mut stream, None)?;
    let target = RbfPredictor::new(config.feature_map.clone(), target_weights)?;
    let theta1 = config
        .initial_weights
        .draw(m, &mut stream, Some(target.weights()))?;
    let feasible_set = config.feasible(m)?;
    let mut state = OcpState::new(theta1, config.eta0, feasible_set.clone())?;
    let mut learner = RbfPredictor::new(hypothesis.clone(), state.action().to_vec())?;
    let mut ledger = RegretLedger::new();
    let mut records = Vec::with_capacity(config.horizon);

    for t in 1..=config.horizon {
        let x: Vec<f64> = config
            .input_lower
            .iter()
            .zip(&config.input_upper)
            .map(|(&lo, &hi)| stream.uniform(lo, hi))
            .collect();
        let y = target.predict(&x)?[0];
        learner.set_weights(state.action())?;
        let phi = hypothesis.features(&x)?;
        let loss = ledger.record(state.action(), phi, y)?;
        let grad = if config.literal_gradient {
            learner.literal_gradient(&x, &[y])?
        } else {
            learner.stage_gradient(&x, &[y])?
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::non_finite("regression stage", Some(t)));
        }
        records.push(RegressionRecord {
            x,
            y,
            theta: state.action().to_vec(),
            loss,
        });
        state.advance(&grad)?;
    }

    Ok(RegressionRun {
        target,
        hypothesis,
        records,
        final_weights: state.action().to_vec(),
        ledger,
        feasible_set,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationalError {
    /// Monte Carlo estimate of `inf_theta E[(<theta, phi(x)> - f(x))^2]`.
    pub estimate: f64,
    pub standard_error: f64,
    pub n_samples: usize,
    pub weights: Vec<f64>,
    pub degenerate: bool,
}

/// Least-squares estimate of the best achievable mean-square loss of `map` against `target`
/// for inputs uniform on the box `[lower, upper]`.
pub fn representational_error(
    map: &RbfFeatureMap,
    target: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<RepresentationalError> {
    let m = map.len();
    if n_samples < m {
        return Err(Error::InvalidInput(format!(
            "need at least {m} samples, got {n_samples}"
        )));
    }
    check_dim(map.input_dim(), lower.len())?;
    check_dim(map.input_dim(), upper.len())?;
    let mut stream = SeededStream::new(seed);
    let mut design = DMatrix::zeros(n_samples, m);
    let mut rhs = DVector::zeros(n_samples);
    for i in 0..n_samples {
        let x: Vec<f64> = lower
            .iter()
            .zip(upper)
            .map(|(&lo, &hi)| stream.uniform(lo, hi))
            .collect();
        for (j, v) in map.features(&x)?.into_iter().enumerate() {
            design[(i, j)] = v;
        }
        rhs[i] = target(&x);
    }
    check_finite("target values", rhs.as_slice(), None)?;
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-12 * n_samples.max(m) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let theta = svd.solve(&rhs, cutoff).map_err(|msg| Error::Numerical {
        message: msg.to_string(),
        residual: f64::NAN,
    })?;
    let residuals = &design * &theta - &rhs;
    let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let n = n_samples as f64;
    let mean = crate::ocp::compensated_sum(sq.iter().copied()) / n;
    let var = if n_samples > 1 {
        crate::ocp::compensated_sum(sq.iter().map(|s| (s - mean) * (s - mean))) / (n - 1.0)
    } else {
        0.0
    };
    Ok(RepresentationalError {
        estimate: mean,
        standard_error: (var / n).sqrt(),
        n_samples,
        weights: theta.as_slice().to_vec(),
        degenerate: rank < m,
    })
}

/// Mean-square loss of `pred` against `target` under the uniform input density on a 1-D
/// interval, by the composite midpoint rule with `points` nodes.
pub fn expected_loss_1d(
    pred: &RbfPredictor,
    target: &dyn Fn(&[f64]) -> f64,
    lower: f64,
    upper: f64,
    points: usize,
) -> Result<f64> {
    if pred.feature_map().input_dim() != 1 || points == 0 {
        return Err(Error::InvalidInput("expected_loss_1d needs 1-D inputs and points >= 1".into()));
    }
    let h = (upper - lower) / points as f64;
    let mut total = 0.0;
    for i in 0..points {
        let x = [lower + (i as f64 + 0.5) * h];
        total += pred.stage_loss(&x, &[target(&x)])?;
    }
    Ok(total / points as f64)
}

/// Second moments of `(phi(x), f(x))` for `x` uniform on a 1-D interval (midpoint rule),
/// so `E[(<theta, phi> - f)^2] = theta' G theta - 2 b' theta + c` costs `O(m^2)` per theta.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMoments {
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    target_sq: f64,
}

impl LossMoments {
    pub fn uniform_1d(
        map: &RbfFeatureMap,
        target: &dyn Fn(&[f64]) -> f64,
        lower: f64,
        upper: f64,
        points: usize,
    ) -> Result<Self> {
        if map.input_dim() != 1 || points == 0 {
            return Err(Error::InvalidInput("loss moments need 1-D inputs and points >= 1".into()));
        }
        let m = map.len();
        let h = (upper - lower) / points as f64;
        let mut gram = DMatrix::zeros(m, m);
        let mut cross = DVector::zeros(m);
        let mut target_sq = 0.0;
        for i in 0..points {
            let x = [lower + (i as f64 + 0.5) * h];
            let phi = DVector::from_vec(map.features(&x)?);
            let y = target(&x);
            gram += &phi * phi.transpose();
            cross += &phi * y;
            target_sq += y * y;
        }
        let n = points as f64;
        Ok(Self {
            gram: gram / n,
            cross: cross / n,
            target_sq: target_sq / n,
        })
    }

    pub fn expected_loss(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.cross.len(), theta.len())?;
        let t = DVector::from_column_slice(theta);
        let v = (t.transpose() * &self.gram * &t)[0] - 2.0 * self.cross.dot(&t) + self.target_sq;
        Ok(v.max(0.0))
    }
}
