//! Online convex programming with Greedy Projection and external-regret accounting.
//!
//! The learner plays `a_t`, observes a convex stage loss, and moves to
//! `project(a_t - eta_t * grad)` with `eta_t = eta_0 / sqrt(t)`. Regret is
//! accounted for quadratic stage losses `(<a, phi_t> - y_t)^2`, which is the
//! only loss family the experiments produce, so the ledger stores the pair
//! `(phi_t, y_t)` instead of a closure.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::export::CsvTable;
use crate::geometry::{dot, FeasibleSet};

/// Membership tolerance for actions emitted by [`OcpState::gp_step`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpState {
    action: Vec<f64>,
    stage: u64,
    step_scale: f64,
    feasible_set: FeasibleSet,
}

impl OcpState {
    /// Starts at stage 1. The initial action is projected onto the set.
    pub fn new(initial: Vec<f64>, step_scale: f64, feasible_set: FeasibleSet) -> Result<Self> {
        check_finite("initial action", &initial, None)?;
        if !(step_scale >= 0.0 && step_scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step scale must be finite and non-negative, got {step_scale}"
            )));
        }
        let action = feasible_set.project(&initial)?;
        Ok(Self {
            action,
            stage: 1,
            step_scale,
            feasible_set,
        })
    }

    pub fn action(&self) -> &[f64] {
        &self.action
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible_set
    }

    /// eta_t = eta_0 / sqrt(t) for the current stage.
    pub fn step_size(&self) -> f64 {
        self.step_scale / (self.stage as f64).sqrt()
    }

    /// One Greedy Projection update; `gradient` is the stage-loss gradient at the current action.
    pub fn gp_step(&self, gradient: &[f64]) -> Result<OcpState> {
        let mut next = self.clone();
        next.advance(gradient)?;
        Ok(next)
    }

    /// In-place form of [`gp_step`](Self::gp_step).
    pub fn advance(&mut self, gradient: &[f64]) -> Result<()> {
        check_dim(self.action.len(), gradient.len())?;
        check_finite("gradient", gradient, Some(self.stage as usize))?;
        let eta = self.step_size();
        let moved: Vec<f64> = self
            .action
            .iter()
            .zip(gradient)
            .map(|(a, g)| a - eta * g)
            .collect();
        self.action = self.feasible_set.project(&moved)?;
        self.stage += 1;
        Ok(())
    }
}

/// Data needed to re-evaluate a quadratic stage loss `(<a, features> - target)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageData {
    pub features: Vec<f64>,
    pub target: f64,
}

impl StageData {
    pub fn loss_at(&self, action: &[f64]) -> f64 {
        let r = dot(action, &self.features) - self.target;
        r * r
    }
}

/// Realized information set of an online run: what was played and what was lost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    stage_losses: Vec<f64>,
    stage_data: Vec<StageData>,
    actions: Vec<Vec<f64>>,
}

/// Minimizer of the cumulative quadratic over a feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct BestAction {
    pub action: Vec<f64>,
    /// The cumulative quadratic was rank deficient; `action` is the minimum-norm choice.
    pub degenerate: bool,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.stage_losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stage_losses.is_empty()
    }

    pub fn stage_losses(&self) -> &[f64] {
        &self.stage_losses
    }

    pub fn stage_data(&self) -> &[StageData] {
        &self.stage_data
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    fn dimension(&self) -> Option<usize> {
        self.stage_data.first().map(|s| s.features.len())
    }

    /// Records that `action` was played against the stage loss `(<a, features> - target)^2`.
    /// Returns the incurred loss.
    pub fn record(&mut self, action: &[f64], features: Vec<f64>, target: f64) -> Result<f64> {
        check_dim(features.len(), action.len())?;
        if let Some(d) = self.dimension() {
            check_dim(d, features.len())?;
        }
        let stage = Some(self.len() + 1);
        check_finite("action", action, stage)?;
        check_finite("features", &features, stage)?;
        check_finite("target", &[target], stage)?;
        let data = StageData { features, target };
        let loss = data.loss_at(action);
        self.stage_losses.push(loss);
        self.stage_data.push(data);
        self.actions.push(action.to_vec());
        Ok(loss)
    }

    /// Cumulative loss of the first `horizon` stages at `candidate`.
    pub fn cumulative_loss_at(&self, candidate: &[f64], horizon: usize) -> Result<f64> {
        if let Some(d) = self.dimension() {
            check_dim(d, candidate.len())?;
        }
        Ok(compensated_sum(
            self.stage_data[..horizon.min(self.len())]
                .iter()
                .map(|s| s.loss_at(candidate)),
        ))
    }

    /// R(T) = sum of incurred losses minus the losses `candidate` would have incurred.
    pub fn external_regret(&self, candidate: &[f64]) -> Result<f64> {
        self.external_regret_until(candidate, self.len())
    }

    /// External regret over the first `horizon` stages.
    pub fn external_regret_until(&self, candidate: &[f64], horizon: usize) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let horizon = horizon.min(self.len());
        let incurred = compensated_sum(self.stage_losses[..horizon].iter().copied());
        Ok(incurred - self.cumulative_loss_at(candidate, horizon)?)
    }

    fn quadratic(&self, horizon: usize) -> CumulativeQuadratic {
        let m = self.dimension().unwrap_or(0);
        let mut q = CumulativeQuadratic::zeros(m);
        for s in &self.stage_data[..horizon] {
            q.add(&s.features, s.target);
        }
        q
    }

    /// Best constant action in hindsight over all recorded stages.
    pub fn best_fixed_action(&self, set: &FeasibleSet) -> Result<BestAction> {
        if self.is_empty() {
            return Err(Error::InvalidInput(
                "best fixed action needs at least one stage".into(),
            ));
        }
        check_dim(set.dimension(), self.dimension().unwrap_or(0))?;
        self.quadratic(self.len()).minimize(set)
    }

    /// Element T-1 is max(0, R(T)) / T against the best fixed action of the first T stages.
    pub fn average_regret_curve(&self, set: &FeasibleSet) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::InvalidInput(
                "average regret curve needs a nonempty ledger".into(),
            ));
        }
        check_dim(set.dimension(), self.dimension().unwrap_or(0))?;
        let m = set.dimension();
        let mut q = CumulativeQuadratic::zeros(m);
        let mut incurred = KahanSum::default();
        let mut curve = Vec::with_capacity(self.len());
        for (t, (s, &loss)) in self.stage_data.iter().zip(&self.stage_losses).enumerate() {
            q.add(&s.features, s.target);
            incurred.add(loss);
            let best = q.minimize(set)?;
            let regret = incurred.value() - q.value(&best.action);
            curve.push(regret.max(0.0) / (t + 1) as f64);
        }
        Ok(curve)
    }

    /// Average regret at a single horizon, evaluated stage by stage.
    pub fn average_regret_at(&self, set: &FeasibleSet, horizon: usize) -> Result<f64> {
        if horizon == 0 || horizon > self.len() {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} outside 1..={}",
                self.len()
            )));
        }
        let best = self.quadratic(horizon).minimize(set)?;
        let regret = self.external_regret_until(&best.action, horizon)?;
        Ok(regret.max(0.0) / horizon as f64)
    }

    /// CSV with columns `stage, loss, a_1..a_m`.
    pub fn to_csv(&self) -> String {
        let m = self.dimension().unwrap_or(0);
        let mut header = vec!["stage".to_string(), "loss".to_string()];
        header.extend((1..=m).map(|i| format!("a_{i}")));
        let mut table = CsvTable::new(&header);
        for (t, (loss, a)) in self.stage_losses.iter().zip(&self.actions).enumerate() {
            table.push_row(t + 1, std::iter::once(*loss).chain(a.iter().copied()));
        }
        table.finish()
    }
}

/// `f(a) = a^T A a - 2 b^T a + c`, the sum of quadratic stage losses.
#[derive(Debug, Clone)]
pub struct CumulativeQuadratic {
    gram: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl CumulativeQuadratic {
    pub fn zeros(m: usize) -> Self {
        Self {
            gram: DMatrix::zeros(m, m),
            linear: DVector::zeros(m),
            constant: 0.0,
        }
    }

    pub fn add(&mut self, features: &[f64], target: f64) {
        let phi = DVector::from_column_slice(features);
        self.gram.ger(1.0, &phi, &phi, 1.0);
        self.linear.axpy(target, &phi, 1.0);
        self.constant += target * target;
    }

    pub fn value(&self, a: &[f64]) -> f64 {
        let a = DVector::from_column_slice(a);
        (a.transpose() * &self.gram * &a)[(0, 0)] - 2.0 * self.linear.dot(&a) + self.constant
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.gram * a - &self.linear)
    }

    /// Minimizer over `set`; the unconstrained minimum-norm solution when it is feasible.
    pub fn minimize(&self, set: &FeasibleSet) -> Result<BestAction> {
        let m = self.linear.len();
        check_dim(set.dimension(), m)?;
        let eig = SymmetricEigen::new(self.gram.clone());
        let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let cutoff = max_eig * 1e-12 * m as f64;
        let rank = eig.eigenvalues.iter().filter(|&&l| l > cutoff).count();
        let degenerate = rank < m;

        // minimum-norm unconstrained solution via the pseudo-inverse
        let qt_b = eig.eigenvectors.transpose() * &self.linear;
        let coeffs = DVector::from_iterator(
            m,
            eig.eigenvalues
                .iter()
                .zip(qt_b.iter())
                .map(|(&l, &c)| if l > cutoff { c / l } else { 0.0 }),
        );
        let free = &eig.eigenvectors * coeffs;
        if set.contains(free.as_slice(), 0.0)? {
            return Ok(BestAction {
                action: free.as_slice().to_vec(),
                degenerate,
            });
        }
        let action = match set {
            FeasibleSet::Box { lower, upper } => self.minimize_box(free.as_slice(), lower, upper),
            FeasibleSet::Ball { center, radius } => {
                self.minimize_ball(&eig, cutoff, center, *radius)
            }
        }?;
        Ok(BestAction { action, degenerate })
    }

    // Cyclic coordinate descent with exact per-coordinate minimization.
    fn minimize_box(&self, start: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
        let m = start.len();
        let mut a = DVector::from_iterator(
            m,
            start
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&lo, &hi))| x.max(lo).min(hi)),
        );
        let scale = self.gram.diagonal().iter().fold(0.0f64, |s, &d| s.max(d));
        if scale == 0.0 {
            return Ok(a.as_slice().to_vec());
        }
        const MAX_SWEEPS: usize = 1_000_000;
        for _ in 0..MAX_SWEEPS {
            let mut max_move = 0.0f64;
            for i in 0..m {
                let aii = self.gram[(i, i)];
                if aii <= scale * 1e-15 {
                    continue;
                }
                let off: f64 = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| self.gram[(i, j)] * a[j])
                    .sum();
                let target = ((self.linear[i] - off) / aii).max(lower[i]).min(upper[i]);
                max_move = max_move.max((target - a[i]).abs());
                a[i] = target;
            }
            if max_move <= 1e-14 * (1.0 + a.amax()) {
                return Ok(a.as_slice().to_vec());
            }
        }
        let g = self.gradient(&a);
        Err(Error::Numerical {
            message: "box-constrained quadratic did not converge".into(),
            residual: g.amax(),
        })
    }

    // Boundary solution (A + mu I) z = b - A c with ||z|| = r, mu found by bisection.
    fn minimize_ball(
        &self,
        eig: &SymmetricEigen<f64, nalgebra::Dyn>,
        cutoff: f64,
        center: &[f64],
        radius: f64,
    ) -> Result<Vec<f64>> {
        let c = DVector::from_column_slice(center);
        let g = &self.linear - &self.gram * &c;
        let qt_g = eig.eigenvectors.transpose() * &g;
        let lambdas: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&l| if l > cutoff { l } else { 0.0 })
            .collect();
        let norm_at = |mu: f64| -> f64 {
            lambdas
                .iter()
                .zip(qt_g.iter())
                .map(|(&l, &w)| (w / (l + mu)).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut lo = 0.0f64;
        let mut hi = g.norm() / radius;
        if hi == 0.0 {
            return Ok(center.to_vec());
        }
        while norm_at(hi) > radius {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm_at(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = hi;
        let coeffs = DVector::from_iterator(
            lambdas.len(),
            lambdas.iter().zip(qt_g.iter()).map(|(&l, &w)| w / (l + mu)),
        );
        let z = &eig.eigenvectors * coeffs;
        let mut a = c + z;
        // bisection leaves ||z|| <= r; snap onto the sphere against rounding
        let dist = (&a - DVector::from_column_slice(center)).norm();
        if dist > radius {
            let cvec = DVector::from_column_slice(center);
            a = &cvec + (&a - &cvec) * (radius / dist);
        }
        Ok(a.as_slice().to_vec())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = KahanSum::default();
    for v in values {
        s.add(v);
    }
    s.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(lo: f64, hi: f64) -> FeasibleSet {
        FeasibleSet::cube(1, lo, hi).unwrap()
    }

    #[test]
    fn gp_step_clamps_to_box() {
        let s = OcpState::new(vec![0.5], 1.0, unit_box(-1.0, 1.0)).unwrap();
        let next = s.gp_step(&[2.0]).unwrap();
        assert_eq!(next.action(), &[-1.0]);
        assert_eq!(next.stage(), 2);
    }

    #[test]
    fn zero_gradient_keeps_action() {
        let s = OcpState::new(vec![0.3, -0.2], 0.7, FeasibleSet::cube(2, -1.0, 1.0).unwrap())
            .unwrap();
        let next = s.gp_step(&[0.0, 0.0]).unwrap();
        assert_eq!(next.action(), s.action());
        assert_eq!(next.stage(), s.stage() + 1);
    }

    #[test]
    fn gp_converges_to_fixed_minimizer() {
        let mut s = OcpState::new(vec![0.0], 1.0, unit_box(-10.0, 10.0)).unwrap();
        for _ in 0..1000 {
            let a = s.action()[0];
            s.advance(&[2.0 * (a - 1.0)]).unwrap();
        }
        assert!((s.action()[0] - 1.0).abs() < 0.05, "{}", s.action()[0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let s = OcpState::new(vec![0.0], 1.0, unit_box(-1.0, 1.0)).unwrap();
        assert!(matches!(
            s.gp_step(&[f64::NAN]),
            Err(Error::NonFinite { stage: Some(1), .. })
        ));
        assert!(s.gp_step(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn step_size_schedule() {
        let mut s = OcpState::new(vec![0.0], 2.0, unit_box(-1.0, 1.0)).unwrap();
        assert_eq!(s.step_size(), 2.0);
        for _ in 0..3 {
            s.advance(&[0.0]).unwrap();
        }
        assert_eq!(s.stage(), 4);
        assert_eq!(s.step_size(), 1.0);
    }

    #[test]
    fn regret_of_played_action_is_zero() {
        let mut ledger = RegretLedger::new();
        for y in [0.0, 2.0, -1.0] {
            ledger.record(&[0.5], vec![1.0], y).unwrap();
        }
        assert_eq!(ledger.external_regret(&[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn regret_hand_evaluated() {
        // (a - y)^2 with y = 0, 2; played 0 twice; candidate 1
        let mut ledger = RegretLedger::new();
        ledger.record(&[0.0], vec![1.0], 0.0).unwrap();
        ledger.record(&[0.0], vec![1.0], 2.0).unwrap();
        assert_eq!(ledger.external_regret(&[1.0]).unwrap(), 2.0);
    }

    #[test]
    fn empty_ledger_has_zero_regret() {
        assert_eq!(RegretLedger::new().external_regret(&[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn best_fixed_action_small_cases() {
        let set = unit_box(-10.0, 10.0);
        let mut one = RegretLedger::new();
        one.record(&[0.0], vec![1.0], 3.0).unwrap();
        let b = one.best_fixed_action(&set).unwrap();
        assert!((b.action[0] - 3.0).abs() < 1e-12);
        assert!(!b.degenerate);

        let mut two = RegretLedger::new();
        two.record(&[0.0], vec![1.0], 1.0).unwrap();
        two.record(&[0.0], vec![1.0], 3.0).unwrap();
        assert!((two.best_fixed_action(&set).unwrap().action[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn best_fixed_action_maximizes_regret() {
        let mut ledger = RegretLedger::new();
        for (phi, y) in [([1.0, 0.5], 0.3), ([0.2, 1.0], -0.7), ([0.9, 0.9], 1.1)] {
            ledger.record(&[0.0, 0.0], phi.to_vec(), y).unwrap();
        }
        let set = FeasibleSet::cube(2, -5.0, 5.0).unwrap();
        let best = ledger.best_fixed_action(&set).unwrap();
        let r_best = ledger.external_regret(&best.action).unwrap();
        for cand in [[0.0, 0.0], [1.0, -1.0], [0.5, 0.5], [-2.0, 3.0]] {
            assert!(r_best >= ledger.external_regret(&cand).unwrap() - 1e-12);
        }
    }

    #[test]
    fn ball_constrained_isotropic_minimizer_matches_grid() {
        // sum over stages of (a_i - 2)^2 style data: minimizer (2, 1.5) lies outside the unit ball
        let mut ledger = RegretLedger::new();
        ledger.record(&[0.0, 0.0], vec![1.0, 0.0], 2.0).unwrap();
        ledger.record(&[0.0, 0.0], vec![0.0, 1.0], 1.5).unwrap();
        let ball = FeasibleSet::new_ball(vec![0.0, 0.0], 1.0).unwrap();
        let best = ledger.best_fixed_action(&ball).unwrap();
        assert!((best.action[0] - 0.8).abs() < 1e-9);
        assert!((best.action[1] - 0.6).abs() < 1e-9);

        // grid oracle, pitch 1e-3
        let mut arg = (f64::INFINITY, 0.0, 0.0);
        let n = 1000;
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * 1e-3, j as f64 * 1e-3);
                if x * x + y * y > 1.0 {
                    continue;
                }
                let v = (x - 2.0).powi(2) + (y - 1.5).powi(2);
                if v < arg.0 {
                    arg = (v, x, y);
                }
            }
        }
        assert!((best.action[0] - arg.1).abs() <= 2e-3);
        assert!((best.action[1] - arg.2).abs() <= 2e-3);
    }

    #[test]
    fn anisotropic_box_uses_constrained_minimizer() {
        // f(a) = (a1 + a2 - 3)^2 + 0.01 (a1 - a2)^2-ish data; clamping the free minimizer is not optimal
        let mut ledger = RegretLedger::new();
        ledger.record(&[0.0, 0.0], vec![1.0, 1.0], 3.0).unwrap();
        ledger.record(&[0.0, 0.0], vec![0.1, -0.1], 0.2).unwrap();
        let set = FeasibleSet::new_box(vec![-1.0, -1.0], vec![1.0, 5.0]).unwrap();
        let best = ledger.best_fixed_action(&set).unwrap();
        let mut grid_best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            for j in 0..=1200 {
                let a = [-1.0 + i as f64 * 0.005, -1.0 + j as f64 * 0.005];
                let v = ledger.cumulative_loss_at(&a, 2).unwrap();
                if v < grid_best.0 {
                    grid_best = (v, a[0], a[1]);
                }
            }
        }
        assert!((best.action[0] - grid_best.1).abs() < 1e-2, "{best:?} {grid_best:?}");
        assert!((best.action[1] - grid_best.2).abs() < 1e-2, "{best:?} {grid_best:?}");
        assert!(ledger.cumulative_loss_at(&best.action, 2).unwrap() <= grid_best.0 + 1e-12);
    }

    #[test]
    fn degenerate_quadratic_returns_minimum_norm() {
        let mut ledger = RegretLedger::new();
        ledger.record(&[0.0, 0.0], vec![1.0, 1.0], 2.0).unwrap();
        let best = ledger
            .best_fixed_action(&FeasibleSet::cube(2, -10.0, 10.0).unwrap())
            .unwrap();
        assert!(best.degenerate);
        assert!((best.action[0] - 1.0).abs() < 1e-12);
        assert!((best.action[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_optimum_gives_zero_curve() {
        let mut ledger = RegretLedger::new();
        for _ in 0..20 {
            ledger.record(&[1.0], vec![1.0], 1.0).unwrap();
        }
        let curve = ledger.average_regret_curve(&unit_box(-2.0, 2.0)).unwrap();
        assert!(curve.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn alternating_adversary_stays_bounded() {
        let set = unit_box(-2.0, 2.0);
        let mut state = OcpState::new(vec![0.0], 1.0, set.clone()).unwrap();
        let mut ledger = RegretLedger::new();
        for t in 0..10_000 {
            let y = if t % 2 == 0 { 1.0 } else { -1.0 };
            let a = state.action()[0];
            ledger.record(&[a], vec![1.0], y).unwrap();
            state.advance(&[2.0 * (a - y)]).unwrap();
        }
        let curve = ledger.average_regret_curve(&set).unwrap();
        // stage losses never exceed (2 + 1)^2 on this box
        assert!(curve.iter().all(|c| c.is_finite() && *c <= 9.0));
        assert!(curve[9_999] < curve[999] && curve[999] < curve[99]);
        let direct = ledger.average_regret_at(&set, 10_000).unwrap();
        assert!((direct - curve[9_999]).abs() < 1e-9);
    }

    #[test]
    fn ledger_csv_has_header_and_rows() {
        let mut ledger = RegretLedger::new();
        ledger.record(&[0.5, 1.0], vec![1.0, 0.0], 0.0).unwrap();
        let csv = ledger.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "stage,loss,a_1,a_2");
        assert_eq!(
            lines.next().unwrap(),
            "1,2.5000000000000000e-1,5.0000000000000000e-1,1.0000000000000000e0"
        );
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut vals = vec![1e16];
        vals.extend(std::iter::repeat(1.0).take(1000));
        vals.push(-1e16);
        assert_eq!(compensated_sum(vals), 1000.0);
    }
}
