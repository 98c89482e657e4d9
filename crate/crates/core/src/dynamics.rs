//! Disturbed contractions and disturbed stable linear recurrences.
//!
//! For a contraction with modulus `lambda` and disturbances that i.p.-vanish up
//! to `r`, the distance to the fixed point i.p.-enters `[0, r / (1 - lambda)]`.
//! For `x_{t+1} = M x_t + d_t` with `rho(M) < 1` the state norm i.p.-enters
//! `[0, sigma r]`, `sigma = sum_i ||M^i||`. The simulators here produce the
//! traces those bounds are checked on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::export::CsvTable;
use crate::geometry::euclidean_norm;
use crate::ip::{power_spike_value, ip_profile, IpReport, IpTarget, SequenceTrace};
use crate::rng::SeededStream;

const MAX_POWER_ITERATIONS: usize = 100_000;
const POWER_RESIDUAL_TOL: f64 = 1e-11;
const MAX_SIGMA_TERMS: usize = 10_000;

pub type Matrix = DMatrix<f64>;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("matrix must have at least one row".into()));
    }
    for r in rows {
        check_dim(n, r.len())?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Modulus of the dominant root of the 2x2 characteristic polynomial.
pub fn closed_form_radius_2x2(m: &DMatrix<f64>) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        det.abs().sqrt()
    } else {
        let s = disc.sqrt();
        ((tr + s) / 2.0).abs().max(((tr - s) / 2.0).abs())
    }
}

/// Spectral radius by power iteration.
///
/// Each step fits `M y = lambda y` and, failing that, the two-term recurrence
/// `M^2 y = a M y + b y`, whose roots capture a dominant complex-conjugate or
/// `+-lambda` pair. 2x2 inputs are cross-checked against the characteristic roots.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("matrix", None));
    }
    let rho = power_iteration(m)?;
    if n == 2 {
        let closed = closed_form_radius_2x2(m);
        if (rho - closed).abs() > 1e-6 * closed.max(1e-300) && (rho - closed).abs() > 1e-12 {
            return Err(Error::Numerical {
                message: format!("power iteration {rho} disagrees with characteristic roots {closed}"),
                residual: (rho - closed).abs(),
            });
        }
    }
    Ok(rho)
}

fn power_iteration(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    let mut y0 = DVector::from_fn(n, |i, _| 1.0 + 0.5 * (1.7 * (i as f64 + 1.0)).sin());
    y0 /= y0.norm();
    let mut last_residual = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        let y1 = m * &y0;
        let n1 = y1.norm();
        if n1 == 0.0 {
            return Ok(0.0);
        }
        // single dominant eigenvalue
        let lambda = y1.dot(&y0);
        let r1 = (&y1 - lambda * &y0).norm() / n1;
        if r1 <= POWER_RESIDUAL_TOL {
            return Ok(lambda.abs());
        }
        // dominant pair: y2 = a y1 + b y0
        let y2 = m * &y1;
        let g11 = y1.dot(&y1);
        let g10 = y1.dot(&y0);
        let g00 = y0.dot(&y0);
        let det = g11 * g00 - g10 * g10;
        if det > 1e-24 * g11 * g00 {
            let r_1 = y2.dot(&y1);
            let r_0 = y2.dot(&y0);
            let a = (r_1 * g00 - r_0 * g10) / det;
            let b = (g11 * r_0 - g10 * r_1) / det;
            let fit = &y2 - a * &y1 - b * &y0;
            let scale = y2.norm().max(a.abs() * n1).max(b.abs()).max(1e-300);
            let r2 = fit.norm() / scale;
            if r2 <= POWER_RESIDUAL_TOL {
                let disc = a * a + 4.0 * b;
                return Ok(if disc < 0.0 {
                    (-b).sqrt()
                } else {
                    let s = disc.sqrt();
                    ((a + s) / 2.0).abs().max(((a - s) / 2.0).abs())
                });
            }
            last_residual = r1.min(r2);
        } else {
            last_residual = r1;
        }
        y0 = y1 / n1;
    }
    Err(Error::Numerical {
        message: format!("power iteration did not converge in {MAX_POWER_ITERATIONS} iterations"),
        residual: last_residual,
    })
}

/// `sigma = sum_{i>=0} ||M^i||` as a certified upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSum {
    /// `partial + tail_bound`; never below the true series.
    pub value: f64,
    pub partial: f64,
    pub tail_bound: f64,
    /// Number of powers summed (`K + 1`).
    pub terms: usize,
}

struct PowerNorms {
    m: DMatrix<f64>,
    power: DMatrix<f64>,
    norms: Vec<f64>,
    // first index j >= 1 with ||M^j|| < 1, and max_{i<j} ||M^i||
    contraction: Option<(usize, f64)>,
}

impl PowerNorms {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self {
            m: m.clone(),
            power: DMatrix::identity(n, n),
            norms: vec![1.0],
            contraction: None,
        }
    }

    fn push_next(&mut self) {
        let next = &self.power * &self.m;
        let norm = if next.iter().all(|&v| v == 0.0) { 0.0 } else { spectral_norm(&next) };
        self.power = next;
        self.norms.push(norm);
        let j = self.norms.len() - 1;
        if self.contraction.is_none() && norm < 1.0 {
            let c = self.norms[..j].iter().fold(0.0f64, |a, &b| a.max(b));
            self.contraction = Some((j, c));
        }
    }

    // sum_{k>=1} ||M^{K+k}|| <= ||M^K|| * C * ((j - 1) + j q / (1 - q)), q = ||M^j||
    fn tail_bound(&self, k: usize) -> Option<f64> {
        let (j, c) = self.contraction?;
        let q = self.norms[j];
        let factor = c * ((j as f64 - 1.0) + j as f64 * q / (1.0 - q));
        Some(self.norms[k] * factor)
    }
}

fn require_stable(m: &DMatrix<f64>) -> Result<f64> {
    let rho = spectral_radius(m)?;
    if rho >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "matrix is not stable: spectral radius {rho} >= 1"
        )));
    }
    Ok(rho)
}

/// Sums powers until the certified tail is at most `tail_tol`.
pub fn sigma_sum(m: &DMatrix<f64>, tail_tol: f64) -> Result<SigmaSum> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    require_stable(m)?;
    let mut norms = PowerNorms::new(m);
    let mut partial = 1.0;
    for k in 0..MAX_SIGMA_TERMS {
        if let Some(tail) = norms.tail_bound(k) {
            if tail <= tail_tol {
                return Ok(SigmaSum {
                    value: partial + tail,
                    partial,
                    tail_bound: tail,
                    terms: k + 1,
                });
            }
        }
        norms.push_next();
        partial += norms.norms[k + 1];
    }
    Err(Error::Numerical {
        message: format!("sigma tail not certified within {MAX_SIGMA_TERMS} powers"),
        residual: norms.tail_bound(MAX_SIGMA_TERMS).unwrap_or(f64::INFINITY),
    })
}

/// Partial sum over `i = 0..=k` plus the certified tail after `k`.
pub fn sigma_sum_at(m: &DMatrix<f64>, k: usize) -> Result<SigmaSum> {
    require_stable(m)?;
    let mut norms = PowerNorms::new(m);
    for _ in 0..k {
        norms.push_next();
    }
    let partial = crate::ocp::compensated_sum(norms.norms.iter().copied());
    let tail = norms.tail_bound(k).ok_or_else(|| Error::Numerical {
        message: format!("no power below norm 1 among the first {k}"),
        residual: f64::INFINITY,
    })?;
    Ok(SigmaSum {
        value: partial + tail,
        partial,
        tail_bound: tail,
        terms: k + 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRecurrence {
    matrix: DMatrix<f64>,
    spectral_radius: f64,
}

impl LinearRecurrence {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let spectral_radius = require_stable(&matrix)?;
        Ok(Self {
            matrix,
            spectral_radius,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }
}

/// Additive disturbance `d_t`, `t = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSignal {
    /// `d_t = scale * q_t * u` with `q` the doubling-gap sequence: vanishes i.p., never classically.
    IpVanishing {
        scale: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    /// `d_t = bound * u` for every t.
    ConstantBounded {
        bound: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    /// Explicit per-stage vectors; must cover the simulated horizon.
    Recorded { values: Vec<Vec<f64>> },
}

impl DisturbanceSignal {
    pub fn zero() -> Self {
        DisturbanceSignal::ConstantBounded {
            bound: 0.0,
            direction: None,
        }
    }

    /// Declared bound `b` with `||d_t|| <= b`; also the `r` used in the bound checks.
    pub fn bound(&self) -> f64 {
        match self {
            DisturbanceSignal::IpVanishing { scale, .. } => scale.abs(),
            DisturbanceSignal::ConstantBounded { bound, .. } => bound.abs(),
            DisturbanceSignal::Recorded { values } => values
                .iter()
                .map(|v| euclidean_norm(v))
                .fold(0.0, f64::max),
        }
    }

    fn unit_direction(direction: &Option<Vec<f64>>, dim: usize) -> Result<Vec<f64>> {
        match direction {
            None => {
                let mut u = vec![0.0; dim];
                u[0] = 1.0;
                Ok(u)
            }
            Some(u) => {
                check_dim(dim, u.len())?;
                let n = euclidean_norm(u);
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::InvalidInput("disturbance direction must be nonzero".into()));
                }
                Ok(u.iter().map(|x| x / n).collect())
            }
        }
    }

    pub fn validate(&self, dim: usize, horizon: usize) -> Result<()> {
        match self {
            DisturbanceSignal::IpVanishing { scale: s, direction }
            | DisturbanceSignal::ConstantBounded { bound: s, direction } => {
                if !s.is_finite() {
                    return Err(Error::InvalidInput("disturbance magnitude must be finite".into()));
                }
                Self::unit_direction(direction, dim).map(|_| ())
            }
            DisturbanceSignal::Recorded { values } => {
                if values.len() < horizon {
                    return Err(Error::InvalidInput(format!(
                        "recorded disturbance has {} stages, horizon is {horizon}",
                        values.len()
                    )));
                }
                for v in values {
                    check_dim(dim, v.len())?;
                    crate::error::check_finite("recorded disturbance", v, None)?;
                }
                Ok(())
            }
        }
    }

    /// Materializes `d_1..=d_T` in dimension `dim`.
    pub fn generate(&self, dim: usize, horizon: usize) -> Result<Vec<Vec<f64>>> {
        self.validate(dim, horizon)?;
        Ok(match self {
            DisturbanceSignal::IpVanishing { scale, direction } => {
                let u = Self::unit_direction(direction, dim)?;
                (1..=horizon)
                    .map(|t| {
                        let s = scale * power_spike_value(t);
                        u.iter().map(|x| s * x).collect()
                    })
                    .collect()
            }
            DisturbanceSignal::ConstantBounded { bound, direction } => {
                let u = Self::unit_direction(direction, dim)?;
                let d: Vec<f64> = u.iter().map(|x| bound * x).collect();
                vec![d; horizon]
            }
            DisturbanceSignal::Recorded { values } => values[..horizon].to_vec(),
        })
    }
}

/// States `x_0..=x_T`, disturbances `d_1..=d_T`, and the attached scalar trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    /// `||x_t||` (linear) or `||y_t - x*||` (contraction) for `t = 1..=T`.
    pub trace: SequenceTrace,
}

impl Trajectory {
    /// Columns `t, x_1..x_n, norm_x, norm_d` for `t = 0..=T`; `norm_x` is the attached trace.
    pub fn to_csv(&self, reference: Option<&[f64]>) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.push("norm_x".into());
        header.push("norm_d".into());
        let mut table = CsvTable::new(&header);
        for (t, x) in self.states.iter().enumerate() {
            let dist = match reference {
                Some(r) => crate::geometry::euclidean_distance(x, r),
                None => euclidean_norm(x),
            };
            let nd = if t == 0 { 0.0 } else { euclidean_norm(&self.disturbances[t - 1]) };
            table.push_row(t, x.iter().copied().chain([dist, nd]));
        }
        table.finish()
    }
}

/// `x_t = M x_{t-1} + d_t` for `t = 1..=T`.
pub fn simulate_linear(
    rec: &LinearRecurrence,
    x0: &[f64],
    disturbance: &DisturbanceSignal,
    horizon: usize,
) -> Result<Trajectory> {
    let n = rec.state_dim();
    check_dim(n, x0.len())?;
    crate::error::check_finite("initial state", x0, None)?;
    let ds = disturbance.generate(n, horizon)?;
    let mut x = DVector::from_column_slice(x0);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut norms = Vec::with_capacity(horizon);
    states.push(x0.to_vec());
    for (t, d) in ds.iter().enumerate() {
        x = rec.matrix() * &x + DVector::from_column_slice(d);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("linear state", Some(t + 1)));
        }
        norms.push(euclidean_norm(x.as_slice()));
        states.push(x.as_slice().to_vec());
    }
    Ok(Trajectory {
        states,
        disturbances: ds,
        trace: SequenceTrace::new(norms)?,
    })
}

pub type StateMap = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A certified contraction: fixed point and Lipschitz modulus are checked at construction.
pub struct ContractionSpec {
    map: Box<StateMap>,
    lipschitz: f64,
    fixed_point: Vec<f64>,
}

impl std::fmt::Debug for ContractionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContractionSpec")
            .field("lipschitz", &self.lipschitz)
            .field("fixed_point", &self.fixed_point)
            .finish_non_exhaustive()
    }
}

pub const CERTIFICATE_PAIRS: usize = 1000;
const CERTIFICATE_TOL: f64 = 1e-9;

impl ContractionSpec {
    /// Checks `map(x*) = x*` and the Lipschitz inequality on 10^3 random pairs drawn
    /// from the box `x* +- 10 (1 + ||x*||)`.
    pub fn new(map: Box<StateMap>, lipschitz: f64, fixed_point: Vec<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&lipschitz) {
            return Err(Error::InvalidInput(format!(
                "contraction modulus must lie in [0, 1), got {lipschitz}"
            )));
        }
        crate::error::check_finite("fixed point", &fixed_point, None)?;
        let image = map(&fixed_point);
        check_dim(fixed_point.len(), image.len())?;
        let drift = crate::geometry::euclidean_distance(&image, &fixed_point);
        if drift > CERTIFICATE_TOL {
            return Err(Error::InvalidInput(format!(
                "declared fixed point moves by {drift:e} under the map"
            )));
        }
        let spec = Self {
            map,
            lipschitz,
            fixed_point,
        };
        spec.certify(CERTIFICATE_PAIRS, 0)?;
        Ok(spec)
    }

    fn certify(&self, pairs: usize, seed: u64) -> Result<()> {
        let mut stream = SeededStream::new(seed);
        let radius = 10.0 * (1.0 + euclidean_norm(&self.fixed_point));
        let sample = |s: &mut SeededStream| -> Vec<f64> {
            self.fixed_point
                .iter()
                .map(|c| s.uniform(c - radius, c + radius))
                .collect()
        };
        for _ in 0..pairs {
            let a = sample(&mut stream);
            let b = sample(&mut stream);
            let lhs = crate::geometry::euclidean_distance(&(self.map)(&a), &(self.map)(&b));
            let rhs = self.lipschitz * crate::geometry::euclidean_distance(&a, &b);
            if lhs > rhs + CERTIFICATE_TOL {
                return Err(Error::InvalidInput(format!(
                    "map is not {}-Lipschitz: pair {a:?}, {b:?} stretches to {lhs}",
                    self.lipschitz
                )));
            }
        }
        Ok(())
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn fixed_point(&self) -> &[f64] {
        &self.fixed_point
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }
}

/// Built-in scalar contractions exposed through the experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionKind {
    /// `y -> slope * y + offset`, fixed point `offset / (1 - slope)`.
    Affine { slope: f64, offset: f64 },
    /// `y -> gain * sin(y)`, fixed point 0.
    Sine { gain: f64 },
}

impl ContractionKind {
    pub fn build(&self) -> Result<ContractionSpec> {
        match *self {
            ContractionKind::Affine { slope, offset } => {
                if slope.abs() >= 1.0 {
                    return Err(Error::InvalidInput(format!("affine slope {slope} is not contracting")));
                }
                ContractionSpec::new(
                    Box::new(move |y: &[f64]| vec![slope * y[0] + offset]),
                    slope.abs(),
                    vec![offset / (1.0 - slope)],
                )
            }
            ContractionKind::Sine { gain } => ContractionSpec::new(
                Box::new(move |y: &[f64]| vec![gain * y[0].sin()]),
                gain.abs(),
                vec![0.0],
            ),
        }
    }
}

/// `y_t = phi(y_{t-1}) + d_t` for `t = 1..=T`.
pub fn simulate_contraction(
    spec: &ContractionSpec,
    y0: &[f64],
    disturbance: &DisturbanceSignal,
    horizon: usize,
) -> Result<Trajectory> {
    let n = spec.fixed_point.len();
    check_dim(n, y0.len())?;
    crate::error::check_finite("initial state", y0, None)?;
    let ds = disturbance.generate(n, horizon)?;
    let mut y = y0.to_vec();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut dist = Vec::with_capacity(horizon);
    states.push(y.clone());
    for (t, d) in ds.iter().enumerate() {
        let image = spec.apply(&y);
        check_dim(n, image.len())?;
        y = image.iter().zip(d).map(|(a, b)| a + b).collect();
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("contraction state", Some(t + 1)));
        }
        dist.push(crate::geometry::euclidean_distance(&y, &spec.fixed_point));
        states.push(y.clone());
    }
    Ok(Trajectory {
        states,
        disturbances: ds,
        trace: SequenceTrace::new(dist)?,
    })
}

/// Fraction of `t in [T/2, T]` whose sample exceeds `level`.
pub fn tail_violation_fraction(trace: &SequenceTrace, level: f64) -> f64 {
    let t_end = trace.len();
    if t_end == 0 {
        return 0.0;
    }
    let start = (t_end / 2).max(1);
    let window = start..=t_end;
    let count = window.clone().count();
    let bad = window.filter(|&t| trace.at(t) > level).count();
    bad as f64 / count as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub sigma: Option<f64>,
    pub r: f64,
    pub lambda: Option<f64>,
    /// `sigma r` or `r / (1 - lambda)`.
    pub bound: f64,
    pub epsilon: f64,
    pub tail_violation_fraction: f64,
    pub ip_report: IpReport,
}

impl BoundReport {
    /// The trace is i.p.-consistent with entering `[0, bound + eps]`.
    pub fn enters(&self) -> bool {
        self.ip_report.consistent
    }
}

/// Default window lengths used when checking that a trace i.p.-enters a bound.
pub const BOUND_DURATIONS: [usize; 2] = [10, 100];

fn bound_report(
    trace: &SequenceTrace,
    sigma: Option<f64>,
    lambda: Option<f64>,
    r: f64,
    bound: f64,
    epsilon: f64,
) -> Result<BoundReport> {
    let queries: Vec<(f64, usize)> = BOUND_DURATIONS.iter().map(|&d| (epsilon, d)).collect();
    let ip_report = ip_profile(trace, IpTarget::Interval(bound), &queries)?;
    Ok(BoundReport {
        sigma,
        r,
        lambda,
        bound,
        epsilon,
        tail_violation_fraction: tail_violation_fraction(trace, bound + epsilon),
        ip_report,
    })
}

/// Checks `||x_t||` against `[0, sigma r]` with `r` the disturbance bound.
pub fn check_linear_bound(
    rec: &LinearRecurrence,
    trajectory: &Trajectory,
    disturbance: &DisturbanceSignal,
    epsilon: f64,
    tail_tol: f64,
) -> Result<BoundReport> {
    let sigma = sigma_sum(rec.matrix(), tail_tol)?.value;
    let r = disturbance.bound();
    bound_report(&trajectory.trace, Some(sigma), None, r, sigma * r, epsilon)
}

/// Checks `||y_t - x*||` against `[0, r / (1 - lambda)]`.
pub fn check_contraction_bound(
    spec: &ContractionSpec,
    trajectory: &Trajectory,
    disturbance: &DisturbanceSignal,
    epsilon: f64,
) -> Result<BoundReport> {
    let r = disturbance.bound();
    let lambda = spec.lipschitz();
    bound_report(&trajectory.trace, None, Some(lambda), r, r / (1.0 - lambda), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ip::{classical_tail_check, ip_witness, IpQuery};

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn radius_examples() {
        assert!((spectral_radius(&m(&[&[0.5, 0.0], &[0.0, 0.3]])).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(spectral_radius(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(), 0.0);
        let th = 0.7f64;
        let rot = m(&[&[0.9 * th.cos(), -0.9 * th.sin()], &[0.9 * th.sin(), 0.9 * th.cos()]]);
        assert!((spectral_radius(&rot).unwrap() - 0.9).abs() < 1e-8 * 0.9);
    }

    #[test]
    fn radius_larger_matrices() {
        // block diagonal: rotation (modulus 0.8), -0.95, 0.3
        let th = 1.1f64;
        let a = m(&[
            &[0.8 * th.cos(), -0.8 * th.sin(), 0.0, 0.0],
            &[0.8 * th.sin(), 0.8 * th.cos(), 0.0, 0.0],
            &[0.0, 0.0, -0.95, 0.0],
            &[0.0, 0.0, 0.0, 0.3],
        ]);
        assert!((spectral_radius(&a).unwrap() - 0.95).abs() < 1e-8);
        // same spectrum under a similarity transform
        let p = m(&[
            &[1.0, 0.2, 0.0, 0.1],
            &[0.0, 1.0, 0.3, 0.0],
            &[0.1, 0.0, 1.0, 0.2],
            &[0.0, 0.4, 0.0, 1.0],
        ]);
        let b = &p * &a * p.clone().try_inverse().unwrap();
        assert!((spectral_radius(&b).unwrap() - 0.95).abs() < 1e-8);
    }

    #[test]
    fn radius_rejects_non_square() {
        assert!(spectral_radius(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sigma_examples() {
        for n in [1, 2, 3] {
            let s = sigma_sum(&(DMatrix::identity(n, n) * 0.5), 1e-10).unwrap();
            assert!((s.value - 2.0).abs() < 1e-9);
        }
        let nil = sigma_sum(&m(&[&[0.0, 1.0], &[0.0, 0.0]]), 1e-10).unwrap();
        assert!((nil.value - 2.0).abs() < 1e-15);
        let d = sigma_sum(&m(&[&[0.9, 0.0], &[0.0, 0.1]]), 1e-8).unwrap();
        assert!((d.value - 10.0).abs() < 1e-6);
        assert!(d.tail_bound <= 1e-8);
        assert!(sigma_sum(&m(&[&[1.0, 0.0], &[0.0, 0.1]]), 1e-8).is_err());
    }

    #[test]
    fn sigma_doubling_k_is_stable() {
        let a = m(&[&[0.5, 1.0], &[0.0, 0.3]]);
        let tol = 1e-8;
        let s = sigma_sum(&a, tol).unwrap();
        let doubled = sigma_sum_at(&a, 2 * (s.terms - 1)).unwrap();
        assert!((s.value - doubled.value).abs() < 2.0 * tol);
        assert!(doubled.value <= s.value + 1e-15);
        assert!(s.partial <= doubled.partial);
    }

    #[test]
    fn homogeneous_linear_decays() {
        let rec = LinearRecurrence::from_rows(&[vec![0.5, 0.2], vec![-0.1, 0.4]]).unwrap();
        let traj = simulate_linear(&rec, &[1.0, -1.0], &DisturbanceSignal::zero(), 500).unwrap();
        let tail = classical_tail_check(&traj.trace, 0.0, 1e-6).unwrap();
        assert!(tail.converged_from.is_some());
    }

    #[test]
    fn scalar_constant_disturbance_hits_sigma_r() {
        let rec = LinearRecurrence::from_rows(&[vec![0.5]]).unwrap();
        let d = DisturbanceSignal::ConstantBounded {
            bound: 1.0,
            direction: None,
        };
        let traj = simulate_linear(&rec, &[0.0], &d, 200).unwrap();
        assert!((traj.trace.at(200) - 2.0).abs() < 1e-12);
        let report = check_linear_bound(&rec, &traj, &d, 0.05, 1e-10).unwrap();
        assert!((report.bound - 2.0).abs() < 1e-9);
        assert!(report.enters());
    }

    #[test]
    fn scalar_power_spike_disturbance_enters_sigma_r() {
        let rec = LinearRecurrence::from_rows(&[vec![0.5]]).unwrap();
        let d = DisturbanceSignal::IpVanishing {
            scale: 0.1,
            direction: None,
        };
        let traj = simulate_linear(&rec, &[0.0], &d, 10_000).unwrap();
        let q = IpQuery::new(0.05, 10, 100, IpTarget::Interval(0.2)).unwrap();
        assert!(ip_witness(&traj.trace, &q).unwrap().is_some());
    }

    #[test]
    fn unstable_recurrence_rejected() {
        assert!(LinearRecurrence::from_rows(&[vec![1.2]]).is_err());
    }

    #[test]
    fn contraction_examples() {
        let spec = ContractionKind::Affine { slope: 0.5, offset: 1.0 }.build().unwrap();
        assert_eq!(spec.fixed_point(), &[2.0]);
        let traj = simulate_contraction(&spec, &[10.0], &DisturbanceSignal::zero(), 50).unwrap();
        let mut prev = 8.0;
        for t in 1..=50 {
            let cur = traj.trace.at(t);
            assert!(cur <= 0.5 * prev + 1e-12);
            prev = cur;
        }

        let d = DisturbanceSignal::IpVanishing { scale: 0.1, direction: None };
        let traj = simulate_contraction(&spec, &[2.0], &d, 10_000).unwrap();
        let rep = check_contraction_bound(&spec, &traj, &d, 0.05).unwrap();
        assert!((rep.bound - 0.2).abs() < 1e-15);
        assert!(rep.enters());

        let sine = ContractionKind::Sine { gain: 0.8 }.build().unwrap();
        let d = DisturbanceSignal::ConstantBounded { bound: 0.05, direction: None };
        let traj = simulate_contraction(&sine, &[1.0], &d, 5_000).unwrap();
        let rep = check_contraction_bound(&sine, &traj, &d, 0.05).unwrap();
        assert!((rep.bound - 0.25).abs() < 1e-12);
        assert!(rep.enters());
        assert!(rep.tail_violation_fraction < 0.05);
    }

    #[test]
    fn non_contractions_are_refused() {
        assert!(ContractionSpec::new(Box::new(|y: &[f64]| vec![2.0 * y[0]]), 0.5, vec![0.0]).is_err());
        assert!(ContractionSpec::new(Box::new(|y: &[f64]| vec![0.5 * y[0]]), 0.5, vec![1.0]).is_err());
        assert!(ContractionKind::Affine { slope: 1.0, offset: 0.0 }.build().is_err());
    }

    #[test]
    fn disturbance_generation() {
        let d = DisturbanceSignal::IpVanishing { scale: 0.1, direction: Some(vec![3.0, 4.0]) };
        let v = d.generate(2, 4).unwrap();
        assert!((v[0][0] - 0.06).abs() < 1e-15 && (v[0][1] - 0.08).abs() < 1e-15);
        assert!((euclidean_norm(&v[2]) - 0.1 / 9.0).abs() < 1e-15);
        assert_eq!(d.bound(), 0.1);
        let rec = DisturbanceSignal::Recorded { values: vec![vec![1.0], vec![-3.0]] };
        assert_eq!(rec.bound(), 3.0);
        assert!(rec.generate(1, 3).is_err());
        assert!(rec.generate(2, 2).is_err());
    }

    #[test]
    fn tail_fraction() {
        let t = SequenceTrace::new(vec![5.0, 5.0, 0.0, 1.0]).unwrap();
        // window t in [2, 4]: values 5, 0, 1
        assert!((tail_violation_fraction(&t, 0.5) - 2.0 / 3.0).abs() < 1e-15);
    }
}
