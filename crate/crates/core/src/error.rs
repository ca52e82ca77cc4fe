use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where a divergence was detected. Fields are filled in as the error
/// propagates outward from the filter step to the ensemble driver.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DivergenceSite {
    pub run: Option<usize>,
    pub agent: Option<String>,
    pub iteration: Option<usize>,
}

impl fmt::Display for DivergenceSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(run) = self.run {
            parts.push(format!("run {run}"));
        }
        if let Some(agent) = &self.agent {
            parts.push(format!("agent {agent}"));
        }
        if let Some(iteration) = self.iteration {
            parts.push(format!("iteration {iteration}"));
        }
        if parts.is_empty() {
            f.write_str("unknown site")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown scenario `{name}` (valid: {})", valid.join(", "))]
    UnknownScenario { name: String, valid: Vec<String> },

    #[error("estimate diverged at {site}: magnitude {magnitude}")]
    Divergence {
        site: DivergenceSite,
        magnitude: f64,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }

    pub(crate) fn at_iteration(self, agent: &str, iteration: usize) -> Self {
        match self {
            Error::Divergence {
                mut site,
                magnitude,
            } => {
                site.agent = Some(agent.to_owned());
                site.iteration = Some(iteration);
                Error::Divergence { site, magnitude }
            }
            other => other,
        }
    }

    pub(crate) fn in_run(self, run: usize) -> Self {
        match self {
            Error::Divergence {
                mut site,
                magnitude,
            } => {
                site.run = Some(run);
                Error::Divergence { site, magnitude }
            }
            other => other,
        }
    }
}
