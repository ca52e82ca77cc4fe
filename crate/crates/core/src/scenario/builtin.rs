use super::{AdaptiveConfig, AgentConfig, AgentRole, Scenario, TrustEntry};
use crate::error::{Error, Result};
use crate::signal::GaussianParams;

/// Built-in experiments: name and one-line description.
pub const BUILTINS: &[(&str, &str)] = &[
    (
        "table1",
        "Table I: agents differing only by initial estimate (w0 0 vs 1), symmetric trust 0.5",
    ),
    (
        "table2",
        "Table II: heterogeneous learning rates (mu 0.2 vs 0.8), same initial estimate",
    ),
    (
        "table3",
        "Table III: heterogeneous learning rates, faster agent starts closer (mu 0.2/0.8, w0 0/1)",
    ),
    (
        "table4",
        "Table IV: selfish non-symmetric trust (s_aa 0.9, s_ab 0.1), w0 0 vs 1",
    ),
    (
        "table5",
        "Table V: different signal perception (noise sd 0.01 vs 0.2), symmetric trust 0.5",
    ),
    (
        "crossing",
        "heterogeneous learning rates, slower agent starts closer (mu 0.8/0.2, w0 0/1); standalone agents cross",
    ),
];

pub fn builtin_names() -> Vec<String> {
    BUILTINS.iter().map(|(n, _)| n.to_string()).collect()
}

struct Pair {
    mu: [f64; 2],
    w0: [f64; 2],
    self_trust: f64,
    noise_sd: [f64; 2],
}

impl Default for Pair {
    fn default() -> Self {
        Self {
            mu: [0.5, 0.5],
            w0: [0.0, 1.0],
            self_trust: 0.5,
            noise_sd: [0.03, 0.03],
        }
    }
}

/// Agents a, b cooperate; c, d are their standalone twins; e averages c, d.
fn two_agent_scenario(p: Pair) -> Scenario {
    let adaptive = |k: usize, counterpart: Option<&str>| AdaptiveConfig {
        mu: p.mu[k],
        w0: vec![p.w0[k]],
        input: GaussianParams {
            mean: 0.0,
            sd: 0.09,
        },
        noise: GaussianParams {
            mean: 0.0,
            sd: p.noise_sd[k],
        },
        counterpart: counterpart.map(str::to_owned),
    };
    let agent = |id: &str, role| AgentConfig {
        id: id.into(),
        role,
    };
    Scenario {
        agents: vec![
            agent("a", AgentRole::Cooperative(adaptive(0, None))),
            agent("b", AgentRole::Cooperative(adaptive(1, None))),
            agent("c", AgentRole::Standalone(adaptive(0, Some("a")))),
            agent("d", AgentRole::Standalone(adaptive(1, Some("b")))),
            agent(
                "e",
                AgentRole::Averaging {
                    sources: vec!["c".into(), "d".into()],
                },
            ),
        ],
        trust: vec![
            TrustEntry::new("a", "a", p.self_trust),
            TrustEntry::new("a", "b", 1.0 - p.self_trust),
            TrustEntry::new("b", "b", p.self_trust),
            TrustEntry::new("b", "a", 1.0 - p.self_trust),
        ],
        ..Default::default()
    }
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let pair = match name {
        "table1" => Pair::default(),
        "table2" => Pair {
            mu: [0.2, 0.8],
            w0: [0.0, 0.0],
            ..Default::default()
        },
        "table3" => Pair {
            mu: [0.2, 0.8],
            ..Default::default()
        },
        "table4" => Pair {
            self_trust: 0.9,
            ..Default::default()
        },
        "table5" => Pair {
            noise_sd: [0.01, 0.2],
            ..Default::default()
        },
        "crossing" => Pair {
            mu: [0.8, 0.2],
            ..Default::default()
        },
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_owned(),
                valid: builtin_names(),
            })
        }
    };
    Ok(two_agent_scenario(pair))
}
