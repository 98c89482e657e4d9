use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat, SystemSpec};
use crate::control::{self, ControlTraceBundle, Scenario};
use crate::dynamics::{self, LinearRecurrence};
use crate::error::{Error, Result};
use crate::export::{parse_single_column, plotdata};
use crate::ip::{self, IpQuery, IpTarget, SequenceTrace};
use crate::regression::run_online_regression;

pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const SUMMARY: &str = "summary.json";

/// Everything an experiment writes, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub summary: Value,
}

impl Artifacts {
    fn new() -> Self {
        Self {
            files: BTreeMap::new(),
            summary: Value::Null,
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Runs a resolved configuration entirely in memory.
pub fn execute(config: &ExperimentConfig) -> Result<Artifacts> {
    let mut art = Artifacts::new();
    let summary = match config.kind {
        ExperimentKind::Regress => regress(config, &mut art)?,
        ExperimentKind::Pendulum => pendulum(config, &mut art)?,
        ExperimentKind::Dynamics => dynamics(config, &mut art)?,
        ExperimentKind::Ipcheck => ipcheck(config)?,
    };
    art.files.insert(RESOLVED_CONFIG.into(), config.to_json() + "\n");
    if config.wants(OutputFormat::Json) {
        art.files.insert(
            SUMMARY.into(),
            serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
        );
    }
    art.summary = summary;
    Ok(art)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    crate::ocp::compensated_sum(v.iter().copied()) / v.len() as f64
}

fn regret_horizons(t_end: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut h = 10;
    while h < t_end {
        out.push(h);
        h *= 10;
    }
    out.push(t_end);
    out
}

fn regress(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let section = config.regress.as_ref().expect("resolved");
    let seed = config.seed.expect("resolved");
    let exp = &section.experiment;
    let run = run_online_regression(exp, seed)?;
    let losses = run.losses();
    let trace = SequenceTrace::new(losses.clone())?;
    let profile = ip::ip_profile(&trace, section.ip.target, &section.ip.queries())?;
    let curve = run.ledger.average_regret_curve(&run.feasible_set)?;
    let best = run.ledger.best_fixed_action(&run.feasible_set)?;
    let k = losses.len().min(20);

    if config.wants(OutputFormat::Csv) {
        art.files.insert("trace.csv".into(), run.to_csv());
        art.files.insert("ledger.csv".into(), run.ledger.to_csv());
    }
    if config.wants(OutputFormat::Plotdata) && exp.input_lower.len() == 1 {
        let rows = run.curve_rows(exp.input_lower[0], exp.input_upper[0], section.curve_points)?;
        art.files.insert("curve.dat".into(), plotdata(&["x", "f", "f_hat"], &rows));
        let rows: Vec<Vec<f64>> = losses
            .iter()
            .zip(&curve)
            .enumerate()
            .map(|(t, (l, r))| vec![(t + 1) as f64, *l, *r])
            .collect();
        art.files.insert("losses.dat".into(), plotdata(&["t", "loss", "average_regret"], &rows));
    }

    let regret: Vec<Value> = regret_horizons(curve.len())
        .into_iter()
        .map(|h| json!({"horizon": h, "average_regret": curve[h - 1]}))
        .collect();
    Ok(json!({
        "kind": "regress",
        "seed": seed,
        "horizon": losses.len(),
        "target_weights": run.target.weights(),
        "final_weights": run.final_weights,
        "mean_loss_first": mean(&losses[..k]),
        "mean_loss_last": mean(&losses[losses.len() - k..]),
        "window": k,
        "best_fixed_action": best.action,
        "best_fixed_action_degenerate": best.degenerate,
        "average_regret": regret,
        "ip_profile": profile,
    }))
}

fn scenario_summary(bundle: &ControlTraceBundle, section: &super::config::PendulumSection) -> Result<Value> {
    let norms = bundle.error_norms();
    let profile = ip::ip_profile(&norms, section.ip.target, &section.ip.queries())?;
    let tail = ip::classical_tail_check(&norms, 0.0, section.classical_epsilon)?;
    let set = bundle.config.resolved_feasible_set(bundle.mixture.len())?;
    Ok(json!({
        "scenario": bundle.scenario.name(),
        "last_quarter_mean_error": bundle.last_quarter_mean_error(),
        "last_quarter_max_tracking": bundle.last_quarter_max_tracking(),
        "final_theta": bundle.records.last().map(|r| r.theta.clone()),
        "recurrence_residual": control::recurrence_residual(bundle)?,
        "model_error_sup_bound": control::model_error_sup_bound(&bundle.mixture, &set),
        "classical_tail": tail,
        "ip_profile": profile,
    }))
}

fn pendulum(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let section = config.pendulum.as_ref().expect("resolved");
    let scenarios = section.scenario_list();
    let bundles: Vec<ControlTraceBundle> = scenarios
        .iter()
        .map(|&s| {
            control::run_pendulum_experiment(&section.params, &section.mixture, &section.controller.with_scenario(s))
        })
        .collect::<Result<_>>()?;

    let mut per = serde_json::Map::new();
    for b in &bundles {
        per.insert(b.scenario.name().into(), scenario_summary(b, section)?);
        if config.wants(OutputFormat::Csv) {
            art.files.insert(format!("trace_{}.csv", b.scenario.name()), b.to_csv());
        }
    }
    if config.wants(OutputFormat::Plotdata) {
        let mut header = vec!["t".to_string()];
        for b in &bundles {
            header.push(format!("tracking_{}", b.scenario.name()));
            header.push(format!("log10_e_{}", b.scenario.name()));
        }
        let cols: Vec<(Vec<f64>, Vec<f64>)> = bundles
            .iter()
            .map(|b| {
                let logs = b
                    .error_norms()
                    .values()
                    .iter()
                    .map(|e| e.max(f64::MIN_POSITIVE).log10())
                    .collect();
                (b.tracking_distances(), logs)
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..section.params.horizon)
            .map(|t| {
                let mut row = vec![t as f64];
                for (track, logs) in &cols {
                    row.push(track[t]);
                    row.push(logs[t]);
                }
                row
            })
            .collect();
        art.files.insert("pendulum.dat".into(), plotdata(&header, &rows));
    }

    let find = |s: Scenario| bundles.iter().find(|b| b.scenario == s);
    let ordering = match (find(Scenario::TrueModel), find(Scenario::GpAdaptive), find(Scenario::ZeroModel)) {
        (Some(i), Some(iii), Some(ii)) => {
            let (ei, eiii, eii) = (
                i.last_quarter_mean_error(),
                iii.last_quarter_mean_error(),
                ii.last_quarter_mean_error(),
            );
            json!({
                "true_le_adaptive": ei <= eiii,
                "adaptive_lt_zero": eiii < eii,
                "adaptive_tenfold_below_zero": 10.0 * eiii <= eii,
                "holds": ei <= eiii && eiii < eii && 10.0 * eiii <= eii,
            })
        }
        _ => Value::Null,
    };
    Ok(json!({
        "kind": "pendulum",
        "error_matrix": dynamics::matrix_to_rows(&control::error_matrix(&section.controller, &section.params)?),
        "scenarios": per,
        "ordering": ordering,
    }))
}

fn dynamics(config: &ExperimentConfig, art: &mut Artifacts) -> Result<Value> {
    let section = config.dynamics.as_ref().expect("resolved");
    let x0 = section.initial_state.clone().expect("resolved");
    let (traj, report, reference) = match &section.system {
        SystemSpec::Linear { matrix } => {
            let rec = LinearRecurrence::from_rows(matrix).map_err(|e| Error::Config(e.to_string()))?;
            let traj = dynamics::simulate_linear(&rec, &x0, &section.disturbance, section.horizon)?;
            let report =
                dynamics::check_linear_bound(&rec, &traj, &section.disturbance, section.epsilon, section.tail_tol)?;
            (traj, report, None)
        }
        SystemSpec::Contraction { map } => {
            let spec = map.build().map_err(|e| Error::Config(e.to_string()))?;
            let traj = dynamics::simulate_contraction(&spec, &x0, &section.disturbance, section.horizon)?;
            let report = dynamics::check_contraction_bound(&spec, &traj, &section.disturbance, section.epsilon)?;
            (traj, report, Some(spec.fixed_point().to_vec()))
        }
    };
    if config.wants(OutputFormat::Csv) {
        art.files.insert("trace.csv".into(), traj.to_csv(reference.as_deref()));
    }
    if config.wants(OutputFormat::Plotdata) {
        let level = report.bound + report.epsilon;
        let rows: Vec<Vec<f64>> = traj
            .trace
            .values()
            .iter()
            .enumerate()
            .map(|(t, v)| vec![(t + 1) as f64, *v, level])
            .collect();
        art.files.insert("trace.dat".into(), plotdata(&["t", "distance", "bound_plus_eps"], &rows));
    }
    Ok(json!({
        "kind": "dynamics",
        "enters": report.enters(),
        "report": report,
    }))
}

fn ipcheck(config: &ExperimentConfig) -> Result<Value> {
    let s = config.ipcheck.as_ref().expect("resolved");
    let text = std::fs::read_to_string(&s.input)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", s.input.display())))?;
    let trace = SequenceTrace::new(parse_single_column(&text)?)?;
    let report = match s.start {
        Some(start) => {
            let entries: Vec<Value> = s
                .durations
                .iter()
                .map(|&d| {
                    let q = IpQuery::new(s.epsilon, d, start, s.target)?;
                    let (witness, infeasible) = match ip::ip_witness(&trace, &q) {
                        Ok(w) => (w, false),
                        Err(Error::QueryInfeasible { .. }) => (None, true),
                        Err(e) => return Err(e),
                    };
                    Ok(json!({
                        "epsilon": s.epsilon,
                        "duration": d,
                        "start": start,
                        "witness_index": witness,
                        "infeasible": infeasible,
                    }))
                })
                .collect::<Result<_>>()?;
            json!({ "target": s.target, "horizon": trace.len(), "entries": entries })
        }
        None => {
            let queries: Vec<(f64, usize)> = s.durations.iter().map(|&d| (s.epsilon, d)).collect();
            serde_json::to_value(ip::ip_profile(&trace, s.target, &queries)?).expect("report serializes")
        }
    };
    let classical = match s.target {
        IpTarget::Point(p) => Some(ip::classical_tail_check(&trace, p, s.epsilon)?),
        IpTarget::Interval(_) => None,
    };
    let cesaro = ip::cesaro_averages(&trace);
    Ok(json!({
        "kind": "ipcheck",
        "input": s.input,
        "horizon": trace.len(),
        "report": report,
        "classical_tail": classical,
        "final_cesaro_mean": cesaro.at(cesaro.len()),
    }))
}
