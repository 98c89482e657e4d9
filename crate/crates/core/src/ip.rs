//! Finite-horizon analysis of convergence with increasing permanence (i.p.).
//!
//! A sequence converges i.p. to `s'` when, for every ball radius `eps`, window
//! length `D` and start `N`, some `n >= N` has `s_{n+1..=n+D}` inside the ball.
//! On a finite trace this can only be checked up to the horizon, so every
//! result here is a statement about consistency at horizon `T`.
//!
//! Stage indices are 1-based throughout: `trace.at(1)` is the first sample.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::ocp::KahanSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrace {
    values: Vec<f64>,
}

impl SequenceTrace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("trace", &values, None)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample at 1-based stage `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Point limit or the interval `[0, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum IpTarget {
    Point(f64),
    Interval(f64),
}

impl IpTarget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IpTarget::Point(p) if !p.is_finite() => {
                Err(Error::InvalidInput(format!("target point must be finite, got {p}")))
            }
            IpTarget::Interval(r) if !(r >= 0.0 && r.is_finite()) => Err(Error::InvalidInput(
                format!("interval bound must be finite and >= 0, got {r}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn distance(&self, s: f64) -> f64 {
        match *self {
            IpTarget::Point(p) => (s - p).abs(),
            IpTarget::Interval(r) => {
                if s < 0.0 {
                    -s
                } else if s > r {
                    s - r
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpQuery {
    pub epsilon: f64,
    pub duration: usize,
    pub start: usize,
    pub target: IpTarget,
}

impl IpQuery {
    pub fn new(epsilon: f64, duration: usize, start: usize, target: IpTarget) -> Result<Self> {
        let q = Self {
            epsilon,
            duration,
            start,
            target,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.duration == 0 || self.start == 0 {
            return Err(Error::InvalidInput(
                "duration and start must both be >= 1".into(),
            ));
        }
        self.target.validate()
    }
}

/// Smallest `n >= N` with `dist(target, s_{n+i}) <= eps` for `i = 1..=D`.
///
/// `Ok(None)` means the trace holds no witness; a window that cannot fit in the
/// trace at all is a [`Error::QueryInfeasible`].
pub fn ip_witness(trace: &SequenceTrace, query: &IpQuery) -> Result<Option<usize>> {
    query.validate()?;
    let len = trace.len();
    if query.start + query.duration > len {
        return Err(Error::QueryInfeasible {
            start: query.start,
            duration: query.duration,
            len,
        });
    }
    let mut run = 0usize;
    for t in query.start + 1..=len {
        if query.target.distance(trace.at(t)) <= query.epsilon {
            run += 1;
            if run == query.duration {
                return Ok(Some(t - query.duration));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpEntry {
    pub epsilon: f64,
    pub duration: usize,
    pub start: usize,
    pub witness_index: Option<usize>,
    pub infeasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpReport {
    pub target: IpTarget,
    pub horizon: usize,
    pub entries: Vec<IpEntry>,
    /// Every feasible query found a witness (and at least one query was feasible).
    pub consistent: bool,
}

impl IpReport {
    pub fn feasible(&self) -> impl Iterator<Item = &IpEntry> {
        self.entries.iter().filter(|e| !e.infeasible)
    }
}

/// Logarithmic start ladder `{1, 10, 100, ...}` capped at `T / 2`.
pub fn start_ladder(horizon: usize) -> Vec<usize> {
    let mut ladder = vec![1];
    let mut n = 10usize;
    while n <= horizon / 2 {
        ladder.push(n);
        n = match n.checked_mul(10) {
            Some(v) => v,
            None => break,
        };
    }
    ladder
}

/// Sweeps every `(eps, D)` pair over the start ladder.
pub fn ip_profile(
    trace: &SequenceTrace,
    target: IpTarget,
    queries: &[(f64, usize)],
) -> Result<IpReport> {
    if queries.is_empty() {
        return Err(Error::InvalidInput("ip profile needs at least one query".into()));
    }
    target.validate()?;
    let mut entries = Vec::new();
    for &(epsilon, duration) in queries {
        for start in start_ladder(trace.len()) {
            let query = IpQuery::new(epsilon, duration, start, target)?;
            let (witness_index, infeasible) = match ip_witness(trace, &query) {
                Ok(w) => (w, false),
                Err(Error::QueryInfeasible { .. }) => (None, true),
                Err(e) => return Err(e),
            };
            entries.push(IpEntry {
                epsilon,
                duration,
                start,
                witness_index,
                infeasible,
            });
        }
    }
    let any_feasible = entries.iter().any(|e| !e.infeasible);
    let consistent = any_feasible
        && entries
            .iter()
            .filter(|e| !e.infeasible)
            .all(|e| e.witness_index.is_some());
    Ok(IpReport {
        target,
        horizon: trace.len(),
        entries,
        consistent,
    })
}

/// Outcome of a classical (eventually-always) convergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    /// Smallest N after which every sample stays within eps.
    pub converged_from: Option<usize>,
    pub last_exceedance: Option<usize>,
}

/// Classical tail check at radius `epsilon`.
///
/// A clean tail is only accepted as evidence when it covers at least the
/// second half of the trace; a final excursion later than `T / 2` (as in the
/// doubling-gap counterexample) leaves the result absent.
pub fn classical_tail_check(trace: &SequenceTrace, target: f64, epsilon: f64) -> Result<TailCheck> {
    if trace.is_empty() {
        return Err(Error::InvalidInput("classical tail check needs a nonempty trace".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let point = IpTarget::Point(target);
    let last = (1..=trace.len())
        .rev()
        .find(|&t| point.distance(trace.at(t)) > epsilon);
    let converged_from = match last {
        None => Some(1),
        Some(l) if 2 * l <= trace.len() => Some(l + 1),
        Some(_) => None,
    };
    Ok(TailCheck {
        converged_from,
        last_exceedance: last,
    })
}

/// Running means `S_T = (1/T) sum_{t<=T} s_t` with compensated summation.
pub fn cesaro_averages(trace: &SequenceTrace) -> SequenceTrace {
    if trace.values.iter().any(|&v| v < 0.0) {
        log::warn!("cesaro averages of a trace with negative entries; the vanishing-mean argument needs s_t >= 0");
    }
    let mut sum = KahanSum::default();
    let values = trace
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            sum.add(v);
            sum.value() / (i + 1) as f64
        })
        .collect();
    SequenceTrace { values }
}

/// `q_t = 1` when `t` is a power of two (including `t = 1`), else `1 / t^2`.
pub fn power_spike_value(t: usize) -> f64 {
    if t.is_power_of_two() {
        1.0
    } else {
        let tf = t as f64;
        1.0 / (tf * tf)
    }
}

/// The doubling-gap counterexample: i.p.-convergent to 0 but not convergent.
pub fn power_spike_sequence(length: usize) -> Result<SequenceTrace> {
    if length == 0 {
        return Err(Error::InvalidInput("sequence length must be >= 1".into()));
    }
    Ok(SequenceTrace {
        values: (1..=length).map(power_spike_value).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(v: Vec<f64>) -> SequenceTrace {
        SequenceTrace::new(v).unwrap()
    }

    fn harmonic(n: usize) -> SequenceTrace {
        trace((1..=n).map(|t| 1.0 / t as f64).collect())
    }

    #[test]
    fn power_spike_values() {
        assert_eq!(power_spike_value(1), 1.0);
        assert_eq!(power_spike_value(3), 1.0 / 9.0);
        assert_eq!(power_spike_value(4), 1.0);
        assert_eq!(power_spike_value(6), 1.0 / 36.0);
    }

    #[test]
    fn zero_trace_witness_is_start() {
        let z = trace(vec![0.0; 50]);
        for start in [1, 7, 20] {
            let q = IpQuery::new(0.01, 5, start, IpTarget::Point(0.0)).unwrap();
            assert_eq!(ip_witness(&z, &q).unwrap(), Some(start));
        }
    }

    #[test]
    fn ones_have_no_witness() {
        let q = IpQuery::new(0.5, 3, 1, IpTarget::Point(0.0)).unwrap();
        assert_eq!(ip_witness(&trace(vec![1.0; 20]), &q).unwrap(), None);
    }

    #[test]
    fn short_trace_is_infeasible_not_negative() {
        let q = IpQuery::new(0.5, 10, 5, IpTarget::Point(0.0)).unwrap();
        assert!(matches!(
            ip_witness(&trace(vec![0.0; 14]), &q),
            Err(Error::QueryInfeasible { .. })
        ));
        assert!(ip_witness(&trace(vec![0.0; 15]), &q).unwrap().is_some());
    }

    #[test]
    fn power_spikes_have_witness_beyond_spikes() {
        let s = power_spike_sequence(100_000).unwrap();
        let q = IpQuery::new(0.1, 10, 100, IpTarget::Point(0.0)).unwrap();
        let n = ip_witness(&s, &q).unwrap().unwrap();
        // n = 100: (100, 110] has no power of two
        assert_eq!(n, 100);
        assert!((n + 1..=n + 10).all(|t| !t.is_power_of_two()));
        let q = IpQuery::new(0.1, 10, 120, IpTarget::Point(0.0)).unwrap();
        let n = ip_witness(&s, &q).unwrap().unwrap();
        assert_eq!(n, 128);
    }

    #[test]
    fn interval_distance() {
        let t = IpTarget::Interval(0.5);
        assert_eq!(t.distance(0.3), 0.0);
        assert_eq!(t.distance(0.0), 0.0);
        assert_eq!(t.distance(0.5), 0.0);
        assert_eq!(t.distance(0.75), 0.25);
        assert_eq!(t.distance(-0.1), 0.1);
    }

    #[test]
    fn profile_examples() {
        let r = ip_profile(&harmonic(10_000), IpTarget::Point(0.0), &[(0.1, 10), (0.01, 100)])
            .unwrap();
        assert!(r.consistent);
        assert!(r.entries.iter().all(|e| e.witness_index.is_some()));
        assert_eq!(
            r.entries.iter().map(|e| e.start).collect::<Vec<_>>(),
            vec![1, 10, 100, 1000, 1, 10, 100, 1000]
        );

        let e1 = ip_profile(&power_spike_sequence(10_000).unwrap(), IpTarget::Point(0.0), &[(0.1, 10)])
            .unwrap();
        assert!(e1.consistent);

        let alt = trace((0..100).map(|i| (i % 2) as f64).collect());
        assert!(!ip_profile(&alt, IpTarget::Point(0.0), &[(0.4, 2)]).unwrap().consistent);
    }

    #[test]
    fn profile_marks_infeasible_windows() {
        let r = ip_profile(&trace(vec![0.0; 30]), IpTarget::Point(0.0), &[(0.1, 25)]).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(!r.entries[0].infeasible);
        assert!(r.entries[1].infeasible);
        assert!(r.consistent);
        assert!(ip_profile(&trace(vec![0.0; 3]), IpTarget::Point(0.0), &[]).is_err());
    }

    #[test]
    fn classical_tail_examples() {
        let h = classical_tail_check(&harmonic(10_000), 0.0, 0.01).unwrap();
        assert_eq!(h.converged_from, Some(100));
        assert_eq!(h.last_exceedance, Some(99));

        let z = classical_tail_check(&trace(vec![0.0; 10]), 0.0, 0.1).unwrap();
        assert_eq!(z.converged_from, Some(1));
        assert_eq!(z.last_exceedance, None);

        let e = classical_tail_check(&power_spike_sequence(1 << 14).unwrap(), 0.0, 0.5).unwrap();
        assert_eq!(e.converged_from, None);
        assert_eq!(e.last_exceedance, Some(1 << 14));
        let e = classical_tail_check(&power_spike_sequence((1 << 14) - 1).unwrap(), 0.0, 0.5).unwrap();
        assert_eq!(e.converged_from, None);
        assert_eq!(e.last_exceedance, Some(1 << 13));
    }

    #[test]
    fn cesaro_small_cases() {
        assert_eq!(cesaro_averages(&trace(vec![1.0, 1.0, 1.0])).values(), &[1.0, 1.0, 1.0]);
        assert_eq!(cesaro_averages(&trace(vec![0.0, 2.0, 4.0])).values(), &[0.0, 1.0, 2.0]);
        let s = cesaro_averages(&power_spike_sequence(10_000).unwrap());
        assert!(s.at(10_000) < 0.01);
    }

    #[test]
    fn invalid_queries() {
        assert!(IpQuery::new(0.0, 1, 1, IpTarget::Point(0.0)).is_err());
        assert!(IpQuery::new(0.1, 0, 1, IpTarget::Point(0.0)).is_err());
        assert!(IpQuery::new(0.1, 1, 0, IpTarget::Point(0.0)).is_err());
        assert!(IpQuery::new(0.1, 1, 1, IpTarget::Interval(-1.0)).is_err());
        assert!(SequenceTrace::new(vec![1.0, f64::NAN]).is_err());
        assert!(power_spike_sequence(0).is_err());
    }

    #[test]
    fn report_json_shape() {
        let r = ip_profile(&trace(vec![1.0; 4]), IpTarget::Point(0.0), &[(0.5, 1)]).unwrap();
        let v = serde_json::to_value(&r.entries[0]).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"epsilon":0.5,"duration":1,"start":1,"witness_index":null,"infeasible":false})
        );
    }
}
