//! Experiment definitions: agents, trust, target and horizon, plus the
//! built-in two-agent experiments.

mod builtin;
mod config;

pub use builtin::{builtin, builtin_names, BUILTINS};
pub use config::{parse, serialize};

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::network::{validate_row, AgentKind, Network, NetworkAgent, TrustMatrix};
use crate::signal::GaussianParams;

pub const DEFAULT_W_OPT: f64 = 2.0;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ENSEMBLE: usize = 100;
pub const DEFAULT_MU: f64 = 0.5;
pub const DEFAULT_INPUT_SD: f64 = 0.09;
pub const DEFAULT_NOISE_SD: f64 = 0.03;

/// Parameters of an agent that runs the LMS update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub mu: f64,
    pub w0: Vec<f64>,
    pub input: GaussianParams,
    pub noise: GaussianParams,
    /// Agent whose signal realizations this one shares.
    pub counterpart: Option<String>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            w0: Vec::new(),
            input: GaussianParams {
                mean: 0.0,
                sd: DEFAULT_INPUT_SD,
            },
            noise: GaussianParams {
                mean: 0.0,
                sd: DEFAULT_NOISE_SD,
            },
            counterpart: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentRole {
    Cooperative(AdaptiveConfig),
    Standalone(AdaptiveConfig),
    Averaging { sources: Vec<String> },
}

impl AgentRole {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AgentRole::Cooperative(_) => "cooperative",
            AgentRole::Standalone(_) => "standalone",
            AgentRole::Averaging { .. } => "averaging",
        }
    }

    pub fn adaptive(&self) -> Option<&AdaptiveConfig> {
        match self {
            AgentRole::Cooperative(c) | AgentRole::Standalone(c) => Some(c),
            AgentRole::Averaging { .. } => None,
        }
    }

    pub fn adaptive_mut(&mut self) -> Option<&mut AdaptiveConfig> {
        match self {
            AgentRole::Cooperative(c) | AgentRole::Standalone(c) => Some(c),
            AgentRole::Averaging { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub id: String,
    pub role: AgentRole,
}

impl AgentConfig {
    pub fn is_cooperative(&self) -> bool {
        matches!(self.role, AgentRole::Cooperative(_))
    }
}

/// One `from to coefficient` line of the trust section.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustEntry {
    pub from: String,
    pub to: String,
    pub coefficient: f64,
}

impl TrustEntry {
    pub fn new(from: &str, to: &str, coefficient: f64) -> Self {
        Self {
            from: from.to_owned(),
            to: to.to_owned(),
            coefficient,
        }
    }
}

/// A complete experiment. Fields are public so that overrides can be
/// applied before [`Scenario::validate`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<AgentConfig>,
    /// Sparse trust entries over adaptive agents; an adaptive agent with no
    /// entries trusts only itself.
    pub trust: Vec<TrustEntry>,
    pub w_opt: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub ensemble: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            agents: Vec::new(),
            trust: Vec::new(),
            w_opt: vec![DEFAULT_W_OPT],
            iterations: DEFAULT_ITERATIONS,
            seed: DEFAULT_SEED,
            ensemble: DEFAULT_ENSEMBLE,
        }
    }
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.w_opt.len()
    }

    pub fn agent(&self, id: &str) -> Option<&AgentConfig> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn agent_mut(&mut self, id: &str) -> Option<&mut AgentConfig> {
        self.agents.iter_mut().find(|a| a.id == id)
    }

    pub fn agent_ids(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.id.clone()).collect()
    }

    /// Roster indices of adaptive agents, in trust-matrix order.
    pub fn adaptive_indices(&self) -> Vec<usize> {
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role.adaptive().is_some())
            .map(|(i, _)| i)
            .collect()
    }

    /// Sets `from → to` trust, replacing an existing entry.
    pub fn set_trust(&mut self, from: &str, to: &str, coefficient: f64) {
        match self.trust.iter_mut().find(|t| t.from == from && t.to == to) {
            Some(t) => t.coefficient = coefficient,
            None => self.trust.push(TrustEntry::new(from, to, coefficient)),
        }
    }

    /// Checks every invariant; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.w_opt.is_empty() {
            return Err(Error::validation(
                "w_opt",
                "must have at least one component",
            ));
        }
        if self.w_opt.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("w_opt", "components must be finite"));
        }
        if self.iterations == 0 {
            return Err(Error::validation("iterations", "must be at least 1"));
        }
        if self.ensemble == 0 {
            return Err(Error::validation("ensemble", "must be at least 1"));
        }
        if self.agents.is_empty() {
            return Err(Error::validation("agents", "scenario has no agents"));
        }
        let m = self.dim();
        let mut seen = HashSet::new();
        for agent in &self.agents {
            if !valid_id(&agent.id) {
                return Err(Error::validation(
                    "id",
                    format!(
                        "`{}` must be non-empty ASCII alphanumerics, `_` or `-`",
                        agent.id
                    ),
                ));
            }
            if !seen.insert(agent.id.as_str()) {
                return Err(Error::validation(
                    "id",
                    format!("duplicate agent id `{}`", agent.id),
                ));
            }
        }
        for agent in &self.agents {
            let id = &agent.id;
            match &agent.role {
                AgentRole::Cooperative(c) | AgentRole::Standalone(c) => {
                    if !(c.mu >= 0.0) || !c.mu.is_finite() {
                        return Err(Error::validation(
                            format!("{id}.mu"),
                            format!("learning rate {} must be finite and non-negative", c.mu),
                        ));
                    }
                    if c.w0.len() != m {
                        return Err(Error::validation(
                            format!("{id}.w0"),
                            format!("has {} components but w_opt has {m}", c.w0.len()),
                        ));
                    }
                    if c.w0.iter().any(|w| !w.is_finite()) {
                        return Err(Error::validation(
                            format!("{id}.w0"),
                            "components must be finite",
                        ));
                    }
                    c.input.validate(&format!("{id}.input"))?;
                    c.noise.validate(&format!("{id}.noise"))?;
                    if let Some(cp) = &c.counterpart {
                        self.check_counterpart(id, cp, c)?;
                    }
                }
                AgentRole::Averaging { sources } => {
                    if sources.is_empty() {
                        return Err(Error::validation(
                            format!("{id}.sources"),
                            "averaging agent needs at least one source",
                        ));
                    }
                    for src in sources {
                        match self.agent(src) {
                            Some(a) if a.role.adaptive().is_some() => {}
                            Some(_) => {
                                return Err(Error::validation(
                                    format!("{id}.sources"),
                                    format!("source `{src}` is not an adaptive agent"),
                                ))
                            }
                            None => {
                                return Err(Error::validation(
                                    format!("{id}.sources"),
                                    format!("unknown agent `{src}`"),
                                ))
                            }
                        }
                    }
                }
            }
        }
        self.trust_matrix().map(|_| ())
    }

    fn check_counterpart(&self, id: &str, cp: &str, own: &AdaptiveConfig) -> Result<()> {
        let field = format!("{id}.counterpart");
        if cp == id {
            return Err(Error::validation(
                field,
                "an agent cannot be its own counterpart",
            ));
        }
        let other = self
            .agent(cp)
            .ok_or_else(|| Error::validation(&field, format!("unknown agent `{cp}`")))?;
        let other = other
            .role
            .adaptive()
            .ok_or_else(|| Error::validation(&field, format!("`{cp}` is not an adaptive agent")))?;
        if other.counterpart.is_some() {
            return Err(Error::validation(
                &field,
                format!("`{cp}` has a counterpart itself"),
            ));
        }
        if other.input != own.input || other.noise != own.noise {
            return Err(Error::validation(
                field,
                format!("`{cp}` has different input/noise parameters"),
            ));
        }
        Ok(())
    }

    /// Dense, validated trust matrix over the adaptive agents.
    pub fn trust_matrix(&self) -> Result<TrustMatrix> {
        let adaptive = self.adaptive_indices();
        let slot: HashMap<&str, usize> = adaptive
            .iter()
            .enumerate()
            .map(|(t, &i)| (self.agents[i].id.as_str(), t))
            .collect();
        let n = adaptive.len();
        let mut rows = vec![vec![0.0; n]; n];
        let mut stated = vec![false; n];
        let mut seen = HashSet::new();
        for entry in &self.trust {
            let field = format!("trust.{}.{}", entry.from, entry.to);
            let from = *slot.get(entry.from.as_str()).ok_or_else(|| {
                Error::validation(&field, format!("`{}` is not an adaptive agent", entry.from))
            })?;
            let to = *slot.get(entry.to.as_str()).ok_or_else(|| {
                Error::validation(&field, format!("`{}` is not an adaptive agent", entry.to))
            })?;
            if !seen.insert((from, to)) {
                return Err(Error::validation(field, "duplicate trust entry"));
            }
            if !(0.0..=1.0).contains(&entry.coefficient) {
                return Err(Error::validation(
                    field,
                    format!("coefficient {} outside [0, 1]", entry.coefficient),
                ));
            }
            rows[from][to] = entry.coefficient;
            stated[from] = true;
        }
        for (t, &i) in adaptive.iter().enumerate() {
            let agent = &self.agents[i];
            if !stated[t] {
                rows[t][t] = 1.0;
                continue;
            }
            validate_row(&rows[t])
                .map_err(|msg| Error::validation(format!("trust.{}", agent.id), msg))?;
            if matches!(agent.role, AgentRole::Standalone(_)) && rows[t][t] != 1.0 {
                return Err(Error::validation(
                    format!("trust.{}", agent.id),
                    "standalone agents must trust only themselves",
                ));
            }
        }
        TrustMatrix::from_rows(rows)
    }

    /// Builds the runtime network. Validates first.
    pub fn network(&self) -> Result<Network> {
        self.validate()?;
        let index: HashMap<&str, usize> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.as_str(), i))
            .collect();
        let agents = self
            .agents
            .iter()
            .map(|a| {
                let (kind, mu) = match &a.role {
                    AgentRole::Cooperative(c) => (AgentKind::Cooperative, c.mu),
                    AgentRole::Standalone(c) => (AgentKind::Standalone, c.mu),
                    AgentRole::Averaging { sources } => (
                        AgentKind::Averaging(sources.iter().map(|s| index[s.as_str()]).collect()),
                        0.0,
                    ),
                };
                NetworkAgent {
                    id: a.id.clone(),
                    kind,
                    mu,
                }
            })
            .collect();
        Network::new(agents, self.trust_matrix()?)
    }

    /// Index of the random stream feeding each adaptive agent: its own
    /// trust-matrix slot, or its counterpart's.
    pub fn stream_indices(&self) -> Vec<Option<u64>> {
        let adaptive = self.adaptive_indices();
        let slot_of = |id: &str| {
            adaptive
                .iter()
                .position(|&i| self.agents[i].id == id)
                .map(|t| t as u64)
        };
        self.agents
            .iter()
            .map(|a| {
                let c = a.role.adaptive()?;
                match &c.counterpart {
                    Some(cp) => slot_of(cp),
                    None => slot_of(&a.id),
                }
            })
            .collect()
    }

    /// Applies one `key=value` override. Keys: `seed`, `iterations`,
    /// `ensemble`, `w_opt` (or `w-opt`), `<agent>.<key>` with any agent
    /// config key, and `trust.<from>.<to>`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        if let Some(rest) = key.strip_prefix("trust.") {
            let (from, to) = rest
                .split_once('.')
                .ok_or_else(|| Error::validation(key, "expected trust.<from>.<to>"))?;
            let coefficient = config::parse_f64(value).map_err(|m| Error::validation(key, m))?;
            self.set_trust(from, to, coefficient);
            return Ok(());
        }
        if let Some((agent, field)) = key.split_once('.') {
            let m = self.dim();
            let agent_cfg = self
                .agent_mut(agent)
                .ok_or_else(|| Error::validation(key, format!("unknown agent `{agent}`")))?;
            config::set_agent_key(agent_cfg, field, value, m)
                .map_err(|m| Error::validation(key, m))?;
            return Ok(());
        }
        config::set_network_key(self, &key.replace('-', "_"), value)
            .map_err(|m| Error::validation(key, m))
    }
}
