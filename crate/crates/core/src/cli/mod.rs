//! Experiment runner: configuration, execution, export and replay verification.

mod config;
mod replay;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{
    DynamicsSection, ExperimentConfig, ExperimentKind, IpSpec, IpcheckSection, OutputFormat, PendulumSection,
    RegressSection, SystemSpec,
};
pub use replay::{first_mismatch, replay_verify, Mismatch, ReplayOutcome};
pub use run::{execute, Artifacts, RESOLVED_CONFIG, SUMMARY};

use crate::control::Scenario;
use crate::error::{Error, Result};
use crate::ip::IpTarget;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "noregret", version, about = "No-regret learning and increasing-permanence experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its artifacts.
    Run(RunArgs),
    /// Re-run from a resolved config and compare a trace file byte for byte.
    ReplayVerify {
        /// Trace file produced by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// The `config.resolved.json` written next to it.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Experiment kind; taken from the config file when omitted.
    pub kind: Option<ExperimentKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<OutputFormat>>,
    /// Pendulum scenario name, or `all`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// ipcheck: single-column CSV trace.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// ipcheck: point target.
    #[arg(long, conflicts_with = "interval")]
    pub target: Option<f64>,
    /// ipcheck: interval target `[0, R]`.
    #[arg(long)]
    pub interval: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// ipcheck: window length; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    pub duration: Option<Vec<usize>>,
    /// ipcheck: single start index instead of the logarithmic ladder.
    #[arg(long)]
    pub start: Option<usize>,
}

const DEFAULT_OUT: &str = "noregret-out";

/// Combines the config file (if any) with command-line overrides.
pub fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, args.kind) {
        (Some(path), kind) => {
            let cfg = ExperimentConfig::load(path)?;
            if let Some(k) = kind {
                if k != cfg.kind {
                    return Err(Error::Config(format!(
                        "command line asks for {} but the config describes {}",
                        k.name(),
                        cfg.kind.name()
                    )));
                }
            }
            cfg
        }
        (None, Some(kind)) => ExperimentConfig::new(kind),
        (None, None) => return Err(Error::Config("give an experiment kind or --config".into())),
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from(DEFAULT_OUT));
    }
    if let Some(f) = &args.format {
        cfg.formats = f.clone();
    }
    if let Some(name) = &args.scenario {
        if cfg.kind != ExperimentKind::Pendulum {
            return Err(Error::Config("--scenario applies to pendulum experiments only".into()));
        }
        let section = cfg.pendulum.get_or_insert_with(Default::default);
        section.scenarios = Some(if name == "all" {
            Scenario::ALL.to_vec()
        } else {
            vec![Scenario::parse(name)?]
        });
    }

    let ip_flags = args.input.is_some()
        || args.target.is_some()
        || args.interval.is_some()
        || args.eps.is_some()
        || args.duration.is_some()
        || args.start.is_some();
    if ip_flags {
        if cfg.kind != ExperimentKind::Ipcheck {
            return Err(Error::Config("--input/--target/--interval/--eps/--duration/--start apply to ipcheck only".into()));
        }
        let base = cfg.ipcheck.take();
        let input = args
            .input
            .clone()
            .or_else(|| base.as_ref().map(|b| b.input.clone()))
            .ok_or_else(|| Error::Config("ipcheck needs --input".into()))?;
        let target = match (args.target, args.interval) {
            (Some(p), _) => IpTarget::Point(p),
            (None, Some(r)) => IpTarget::Interval(r),
            (None, None) => base.as_ref().map_or(IpTarget::Point(0.0), |b| b.target),
        };
        let epsilon = args
            .eps
            .or_else(|| base.as_ref().map(|b| b.epsilon))
            .ok_or_else(|| Error::Config("ipcheck needs --eps".into()))?;
        let durations = args
            .duration
            .clone()
            .or_else(|| base.as_ref().map(|b| b.durations.clone()))
            .ok_or_else(|| Error::Config("ipcheck needs --duration".into()))?;
        let start = args.start.or_else(|| base.as_ref().and_then(|b| b.start));
        cfg.ipcheck = Some(IpcheckSection {
            input,
            target,
            epsilon,
            durations,
            start,
        });
    }
    cfg.resolved()
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical { .. } | Error::NonFinite { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Machine-readable error report written to stderr.
pub fn error_json(err: &Error) -> String {
    json!({
        "error": err.kind(),
        "message": err.to_string(),
        "stage": err.stage(),
        "exit_code": exit_code(err),
    })
    .to_string()
}

fn run_command(args: &RunArgs) -> Result<i32> {
    let cfg = build_config(args)?;
    let out = cfg.out.clone().expect("resolved");
    let artifacts = execute(&cfg)?;
    artifacts.write_to(&out)?;
    log::info!("wrote {} files to {}", artifacts.files.len(), out.display());
    println!(
        "{}",
        json!({
            "out": out,
            "files": artifacts.files.keys().collect::<Vec<_>>(),
        })
    );
    Ok(EXIT_OK)
}

/// Parses arguments, dispatches, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::ReplayVerify { trace, config } => replay_verify(trace, config).map(|outcome| {
            println!("{}", serde_json::to_string(&outcome).expect("outcome serializes"));
            if outcome.identical {
                EXIT_OK
            } else {
                EXIT_MISMATCH
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
