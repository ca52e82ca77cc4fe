//! Line-oriented scenario config format.
//!
//! ```text
//! # comment
//! [network]
//! w_opt = 2.0           # comma-separated for M > 1
//! iterations = 1000
//! seed = 42
//! ensemble = 100
//!
//! [agent]
//! id = a
//! kind = cooperative    # cooperative | standalone | averaging
//! mu = 0.5
//! w0 = 0
//! input_mean = 0
//! input_sd = 0.09
//! noise_mean = 0
//! noise_sd = 0.03
//! counterpart = a       # optional: share this agent's signal realizations
//!
//! [agent]
//! id = e
//! kind = averaging
//! sources = c, d
//!
//! [trust]
//! a a 0.5               # from to coefficient
//! a b 0.5
//! ```
//!
//! Several `key = value` pairs may share a line. Spaces around `=` and `,`
//! are ignored. `id` and `kind` are required in every agent section; the
//! other keys default to mu 0.5, w0 all zeros, input N(0, 0.09²) and noise
//! N(0, 0.03²). The network section is optional (w_opt 2, 1000 iterations,
//! seed 42, ensemble 100). Adaptive agents without trust lines trust only
//! themselves.

use std::fmt::Write as _;

use super::{valid_id, AdaptiveConfig, AgentConfig, AgentRole, Scenario, TrustEntry};
use crate::error::{Error, Result};

pub(crate) fn parse_f64(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{value}` is not finite"));
    }
    Ok(v)
}

fn parse_vec(value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|v| parse_f64(v.trim())).collect()
}

fn parse_int<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a non-negative integer"))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

pub(crate) fn set_network_key(
    s: &mut Scenario,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    match key {
        "w_opt" => s.w_opt = parse_vec(value)?,
        "iterations" => s.iterations = parse_int(value)?,
        "seed" => s.seed = parse_int(value)?,
        "ensemble" => s.ensemble = parse_int(value)?,
        _ => return Err(format!("unknown network key `{key}`")),
    }
    Ok(())
}

fn role_for_kind(
    kind: &str,
    previous: Option<&AgentRole>,
) -> std::result::Result<AgentRole, String> {
    let adaptive = previous
        .and_then(AgentRole::adaptive)
        .cloned()
        .unwrap_or_default();
    match kind {
        "cooperative" => Ok(AgentRole::Cooperative(adaptive)),
        "standalone" => Ok(AgentRole::Standalone(adaptive)),
        "averaging" => Ok(AgentRole::Averaging {
            sources: match previous {
                Some(AgentRole::Averaging { sources }) => sources.clone(),
                _ => Vec::new(),
            },
        }),
        other => Err(format!(
            "unknown kind `{other}` (expected cooperative, standalone or averaging)"
        )),
    }
}

/// Sets one agent key on an existing config. `dim` fills an empty `w0`
/// when the kind changes to an adaptive one.
pub(crate) fn set_agent_key(
    agent: &mut AgentConfig,
    key: &str,
    value: &str,
    dim: usize,
) -> std::result::Result<(), String> {
    match key {
        "id" => {
            if !valid_id(value) {
                return Err(format!("invalid id `{value}`"));
            }
            agent.id = value.to_owned();
            return Ok(());
        }
        "kind" => {
            agent.role = role_for_kind(value, Some(&agent.role))?;
            if let Some(c) = agent.role.adaptive_mut() {
                if c.w0.is_empty() {
                    c.w0 = vec![0.0; dim];
                }
            }
            return Ok(());
        }
        _ => {}
    }
    let kind = agent.role.kind_name();
    match &mut agent.role {
        AgentRole::Averaging { sources } => match key {
            "sources" => *sources = parse_list(value),
            "mu" | "w0" | "input_mean" | "input_sd" | "noise_mean" | "noise_sd" | "counterpart" => {
                return Err(format!("key `{key}` is not allowed for {kind} agents"))
            }
            _ => return Err(format!("unknown agent key `{key}`")),
        },
        AgentRole::Cooperative(c) | AgentRole::Standalone(c) => match key {
            "mu" => c.mu = parse_f64(value)?,
            "w0" => c.w0 = parse_vec(value)?,
            "input_mean" => c.input.mean = parse_f64(value)?,
            "input_sd" => c.input.sd = parse_f64(value)?,
            "noise_mean" => c.noise.mean = parse_f64(value)?,
            "noise_sd" => c.noise.sd = parse_f64(value)?,
            "counterpart" => {
                c.counterpart = if value.is_empty() {
                    None
                } else {
                    Some(value.to_owned())
                }
            }
            "sources" => return Err(format!("key `{key}` is not allowed for {kind} agents")),
            _ => return Err(format!("unknown agent key `{key}`")),
        },
    }
    Ok(())
}

/// Removes spaces around `=` and `,` so pairs can be split on whitespace.
fn normalize(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    for c in line.chars() {
        if c == '=' || c == ',' {
            while out.ends_with(char::is_whitespace) {
                out.pop();
            }
            out.push(c);
        } else if c.is_whitespace() && (out.ends_with('=') || out.ends_with(',')) {
            continue;
        } else {
            out.push(c);
        }
    }
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Network,
    Agent,
    Trust,
}

struct AgentDraft {
    line: usize,
    pairs: Vec<(usize, String, String)>,
}

pub fn parse(text: &str) -> Result<Scenario> {
    let mut scenario = Scenario::default();
    let mut section = Section::None;
    let mut network_seen = false;
    let mut drafts: Vec<AgentDraft> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let perr = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| perr(format!("unterminated section header `{content}`")))?
                .trim();
            section = match name {
                "network" => {
                    if network_seen {
                        return Err(perr("duplicate [network] section".into()));
                    }
                    network_seen = true;
                    Section::Network
                }
                "agent" => {
                    drafts.push(AgentDraft {
                        line: line_no,
                        pairs: Vec::new(),
                    });
                    Section::Agent
                }
                "trust" => Section::Trust,
                other => return Err(perr(format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(perr("content before the first section".into())),
            Section::Trust => {
                let fields: Vec<&str> = content.split_whitespace().collect();
                let [from, to, coefficient] = fields[..] else {
                    return Err(perr(format!(
                        "expected `from to coefficient`, found `{content}`"
                    )));
                };
                let coefficient = parse_f64(coefficient).map_err(perr)?;
                scenario.trust.push(TrustEntry::new(from, to, coefficient));
            }
            Section::Network | Section::Agent => {
                for token in normalize(content).split_whitespace() {
                    let (key, value) = token
                        .split_once('=')
                        .ok_or_else(|| perr(format!("expected `key = value`, found `{token}`")))?;
                    if section == Section::Network {
                        set_network_key(&mut scenario, key, value).map_err(perr)?;
                    } else {
                        let draft = drafts.last_mut().expect("agent section open");
                        if draft.pairs.iter().any(|(_, k, _)| k == key) {
                            return Err(perr(format!("duplicate key `{key}`")));
                        }
                        draft
                            .pairs
                            .push((line_no, key.to_owned(), value.to_owned()));
                    }
                }
            }
        }
    }

    let dim = scenario.dim();
    for draft in drafts {
        let find = |key: &str| {
            draft
                .pairs
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(_, _, v)| v.clone())
        };
        let id = find("id").ok_or_else(|| Error::Parse {
            line: draft.line,
            message: "agent section without `id`".into(),
        })?;
        let kind = find("kind").ok_or_else(|| Error::Parse {
            line: draft.line,
            message: format!("agent `{id}` has no `kind`"),
        })?;
        let role = role_for_kind(&kind, None).map_err(|message| Error::Parse {
            line: draft.line,
            message,
        })?;
        let mut agent = AgentConfig { id, role };
        for (line, key, value) in &draft.pairs {
            if key == "id" || key == "kind" {
                continue;
            }
            set_agent_key(&mut agent, key, value, dim).map_err(|message| Error::Parse {
                line: *line,
                message,
            })?;
        }
        if let Some(c) = agent.role.adaptive_mut() {
            if c.w0.is_empty() {
                c.w0 = vec![0.0; dim];
            }
        }
        scenario.agents.push(agent);
    }

    scenario.validate()?;
    Ok(scenario)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text form; `parse(&serialize(s)) == s` for any valid scenario.
pub fn serialize(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[network]");
    let _ = writeln!(out, "w_opt = {}", join(&s.w_opt));
    let _ = writeln!(out, "iterations = {}", s.iterations);
    let _ = writeln!(out, "seed = {}", s.seed);
    let _ = writeln!(out, "ensemble = {}", s.ensemble);
    for agent in &s.agents {
        let _ = writeln!(out, "\n[agent]");
        let _ = writeln!(out, "id = {}", agent.id);
        let _ = writeln!(out, "kind = {}", agent.role.kind_name());
        match &agent.role {
            AgentRole::Averaging { sources } => {
                let _ = writeln!(out, "sources = {}", sources.join(", "));
            }
            AgentRole::Cooperative(c) | AgentRole::Standalone(c) => write_adaptive(&mut out, c),
        }
    }
    if !s.trust.is_empty() {
        let _ = writeln!(out, "\n[trust]");
        for t in &s.trust {
            let _ = writeln!(out, "{} {} {}", t.from, t.to, t.coefficient);
        }
    }
    out
}

fn write_adaptive(out: &mut String, c: &AdaptiveConfig) {
    let _ = writeln!(out, "mu = {}", c.mu);
    let _ = writeln!(out, "w0 = {}", join(&c.w0));
    let _ = writeln!(out, "input_mean = {}", c.input.mean);
    let _ = writeln!(out, "input_sd = {}", c.input.sd);
    let _ = writeln!(out, "noise_mean = {}", c.noise.mean);
    let _ = writeln!(out, "noise_sd = {}", c.noise.sd);
    if let Some(cp) = &c.counterpart {
        let _ = writeln!(out, "counterpart = {cp}");
    }
}
