use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {what}{}", stage_suffix(*.stage))]
    NonFinite { what: String, stage: Option<usize> },

    #[error("query infeasible: start {start} + duration {duration} exceeds trace length {len}")]
    QueryInfeasible {
        start: usize,
        duration: usize,
        len: usize,
    },

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn stage_suffix(stage: Option<usize>) -> String {
    match stage {
        Some(t) => format!(" at stage {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn non_finite(what: impl Into<String>, stage: Option<usize>) -> Self {
        Error::NonFinite {
            what: what.into(),
            stage,
        }
    }

    /// Short machine-readable tag, used by the CLI error JSON and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::InvalidInput(_) => "invalid_input",
            Error::NonFinite { .. } => "non_finite",
            Error::QueryInfeasible { .. } => "query_infeasible",
            Error::Numerical { .. } => "numerical",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Stage index for runtime failures inside an online loop, if known.
    pub fn stage(&self) -> Option<usize> {
        match self {
            Error::NonFinite { stage, .. } => *stage,
            _ => None,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn check_finite(what: &str, values: &[f64], stage: Option<usize>) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(what, stage))
    }
}
