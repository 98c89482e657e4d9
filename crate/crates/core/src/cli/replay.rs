use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::execute;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    /// 1-based line number; line 1 is the header.
    pub line: usize,
    pub expected: Option<String>,
    pub found: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub identical: bool,
    pub file: String,
    pub first_mismatch: Option<Mismatch>,
}

/// First differing line between the regenerated and the stored trace.
pub fn first_mismatch(expected: &str, found: &str) -> Option<Mismatch> {
    if expected == found {
        return None;
    }
    let mut a = expected.split_inclusive('\n');
    let mut b = found.split_inclusive('\n');
    let mut line = 1;
    loop {
        match (a.next(), b.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                let trim = |s: &str| s.trim_end_matches('\n').to_string();
                return Some(Mismatch {
                    line,
                    expected: x.map(trim),
                    found: y.map(trim),
                });
            }
        }
    }
}

/// Re-executes the experiment described by `config_path` and compares the
/// regenerated file named like `trace_path` byte for byte.
pub fn replay_verify(trace_path: &Path, config_path: &Path) -> Result<ReplayOutcome> {
    let stored = std::fs::read(trace_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", trace_path.display())))?;
    let stored = String::from_utf8(stored)
        .map_err(|_| Error::Config(format!("{} is not UTF-8 text", trace_path.display())))?;
    let config = ExperimentConfig::load(config_path)?.resolved()?;
    let name = trace_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("{} has no file name", trace_path.display())))?
        .to_string();
    let artifacts = execute(&config)?;
    let regenerated = artifacts.files.get(&name).ok_or_else(|| {
        Error::Config(format!(
            "the experiment does not produce a file named {name}; it writes {:?}",
            artifacts.files.keys().collect::<Vec<_>>()
        ))
    })?;
    let mismatch = first_mismatch(regenerated, &stored);
    Ok(ReplayOutcome {
        identical: mismatch.is_none(),
        file: name,
        first_mismatch: mismatch,
    })
}
