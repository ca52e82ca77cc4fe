//! Diffusion layer: trust topology, the combine step and one full
//! combine-then-adapt iteration over a network of agents.

use crate::error::{Error, Result};
use crate::filter::{lms_step, WeightVector};
use crate::signal::SignalSample;

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Row-stochastic matrix of trust coefficients; entry `(a, b)` is the trust
/// agent `a` places in agent `b`'s estimate. Zero means not adjacent.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustMatrix {
    n: usize,
    s: Vec<f64>,
}

impl TrustMatrix {
    pub fn identity(n: usize) -> Self {
        let mut s = vec![0.0; n * n];
        for a in 0..n {
            s[a * n + a] = 1.0;
        }
        Self { n, s }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut s = Vec::with_capacity(n * n);
        for (a, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(
                    format!("trust row {a}"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            s.extend(row);
        }
        let m = Self { n, s };
        for a in 0..n {
            validate_row(m.row(a))
                .map_err(|msg| Error::validation(format!("trust row {a}"), msg))?;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.s[a * self.n..(a + 1) * self.n]
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.s[a * self.n + b]
    }

    pub fn is_identity_row(&self, a: usize) -> bool {
        self.row(a)
            .iter()
            .enumerate()
            .all(|(b, &s)| if a == b { s == 1.0 } else { s == 0.0 })
    }
}

/// Checks a single row: entries in [0, 1] summing to one.
pub fn validate_row(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(bad) = row.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(format!("coefficient {bad} outside [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!("trust row sum {sum} ≠ 1"));
    }
    Ok(())
}

/// Convex combination `Σ_b s_ab w_b` of the neighbours' previous estimates.
/// Zero coefficients are skipped, so only the neighbourhood contributes.
pub fn combine(trust_row: &[f64], previous: &[&[f64]]) -> Result<WeightVector> {
    validate_row(trust_row).map_err(Error::Config)?;
    combine_unchecked(trust_row, previous)
}

pub(crate) fn combine_unchecked(trust_row: &[f64], previous: &[&[f64]]) -> Result<WeightVector> {
    if trust_row.len() != previous.len() {
        return Err(Error::Dimension {
            expected: trust_row.len(),
            found: previous.len(),
        });
    }
    let mut acc: Option<Vec<f64>> = None;
    for (&s, w) in trust_row.iter().zip(previous) {
        if s == 0.0 {
            continue;
        }
        match acc.as_mut() {
            None => acc = Some(w.iter().map(|w| s * w).collect()),
            Some(acc) => {
                if acc.len() != w.len() {
                    return Err(Error::Dimension {
                        expected: acc.len(),
                        found: w.len(),
                    });
                }
                for (a, w) in acc.iter_mut().zip(w.iter()) {
                    *a += s * w;
                }
            }
        }
    }
    acc.map(WeightVector)
        .ok_or_else(|| Error::Config("trust row has no neighbours".into()))
}

/// Two-agent form of the combine step: `w_a + s_ab (w_b − w_a)`. Full
/// trust adopts `w_b` exactly.
pub fn pairwise_combine(w_a: &[f64], w_b: &[f64], s_ab: f64) -> WeightVector {
    if s_ab == 1.0 {
        return WeightVector(w_b.to_vec());
    }
    w_a.iter()
        .zip(w_b)
        .map(|(a, b)| a + s_ab * (b - a))
        .collect::<Vec<_>>()
        .into()
}

/// Component-wise arithmetic mean of the sources.
pub fn averaging_update(sources: &[&[f64]]) -> Result<WeightVector> {
    let first = sources
        .first()
        .ok_or_else(|| Error::Config("averaging agent needs at least one source".into()))?;
    let mut acc = first.to_vec();
    for w in &sources[1..] {
        if w.len() != acc.len() {
            return Err(Error::Dimension {
                expected: acc.len(),
                found: w.len(),
            });
        }
        for (a, w) in acc.iter_mut().zip(w.iter()) {
            *a += w;
        }
    }
    let n = sources.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(WeightVector(acc))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentKind {
    Cooperative,
    Standalone,
    /// Indices of the agents being averaged.
    Averaging(Vec<usize>),
}

impl AgentKind {
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, AgentKind::Averaging(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub w: WeightVector,
    pub psi: WeightVector,
    /// Last a-priori error; NaN for averaging agents.
    pub e: f64,
}

impl AgentState {
    pub fn initial(w0: WeightVector) -> Self {
        Self {
            psi: w0.clone(),
            w: w0,
            e: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkAgent {
    pub id: String,
    pub kind: AgentKind,
    /// Learning rate; ignored for averaging agents.
    pub mu: f64,
}

/// Static network: agent roster plus the trust matrix over its adaptive
/// agents (in roster order).
#[derive(Debug, Clone)]
pub struct Network {
    agents: Vec<NetworkAgent>,
    trust: TrustMatrix,
    /// Roster index -> trust index, for adaptive agents.
    slot: Vec<Option<usize>>,
    /// Trust index -> roster index.
    adaptive: Vec<usize>,
}

impl Network {
    pub fn new(agents: Vec<NetworkAgent>, trust: TrustMatrix) -> Result<Self> {
        let mut slot = Vec::with_capacity(agents.len());
        let mut adaptive = Vec::new();
        for (idx, agent) in agents.iter().enumerate() {
            if agent.kind.is_adaptive() {
                slot.push(Some(adaptive.len()));
                adaptive.push(idx);
            } else {
                slot.push(None);
            }
        }
        if trust.len() != adaptive.len() {
            return Err(Error::validation(
                "trust",
                format!(
                    "matrix is {n}×{n} but there are {} adaptive agents",
                    adaptive.len(),
                    n = trust.len()
                ),
            ));
        }
        for agent in &agents {
            match &agent.kind {
                AgentKind::Averaging(sources) => {
                    if sources.is_empty() {
                        return Err(Error::validation(
                            format!("{}.sources", agent.id),
                            "averaging agent needs at least one source",
                        ));
                    }
                    for &src in sources {
                        if slot.get(src).copied().flatten().is_none() {
                            return Err(Error::validation(
                                format!("{}.sources", agent.id),
                                format!("source {src} is not an adaptive agent"),
                            ));
                        }
                    }
                }
                _ => {
                    if !(agent.mu >= 0.0) || !agent.mu.is_finite() {
                        return Err(Error::validation(
                            format!("{}.mu", agent.id),
                            format!("learning rate {} must be finite and non-negative", agent.mu),
                        ));
                    }
                }
            }
        }
        for (t, &idx) in adaptive.iter().enumerate() {
            if agents[idx].kind == AgentKind::Standalone && !trust.is_identity_row(t) {
                return Err(Error::validation(
                    format!("trust.{}", agents[idx].id),
                    "standalone agents must trust only themselves",
                ));
            }
        }
        Ok(Self {
            agents,
            trust,
            slot,
            adaptive,
        })
    }

    pub fn agents(&self) -> &[NetworkAgent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn trust(&self) -> &TrustMatrix {
        &self.trust
    }

    /// Roster indices of the adaptive agents, in trust-matrix order.
    pub fn adaptive_agents(&self) -> &[usize] {
        &self.adaptive
    }

    pub fn trust_slot(&self, agent: usize) -> Option<usize> {
        self.slot[agent]
    }

    /// States at iteration 0: adaptive agents at their `w0`, averaging
    /// agents at the mean of their sources' `w0`.
    pub fn initial_states(&self, w0: &[WeightVector]) -> Result<Vec<AgentState>> {
        if w0.len() != self.agents.len() {
            return Err(Error::Dimension {
                expected: self.agents.len(),
                found: w0.len(),
            });
        }
        let mut states: Vec<AgentState> = w0.iter().cloned().map(AgentState::initial).collect();
        self.update_averaging(&mut states)?;
        Ok(states)
    }

    fn update_averaging(&self, states: &mut [AgentState]) -> Result<()> {
        for (idx, agent) in self.agents.iter().enumerate() {
            if let AgentKind::Averaging(sources) = &agent.kind {
                let src: Vec<&[f64]> = sources.iter().map(|&s| &states[s].w[..]).collect();
                let w = averaging_update(&src)?;
                states[idx] = AgentState {
                    psi: w.clone(),
                    w,
                    e: f64::NAN,
                };
            }
        }
        Ok(())
    }

    /// One combine-then-adapt iteration. `samples[k]` must be present for
    /// every adaptive agent `k`; `iteration` only labels errors.
    pub fn cta_iteration(
        &self,
        states: &[AgentState],
        samples: &[Option<SignalSample>],
        iteration: usize,
    ) -> Result<Vec<AgentState>> {
        self.cta_iteration_ordered(states, samples, iteration, &self.adaptive)
    }

    /// As [`Network::cta_iteration`], adapting agents in the given order.
    /// The result does not depend on `order`: every combine reads only
    /// estimates from the previous iteration.
    pub fn cta_iteration_ordered(
        &self,
        states: &[AgentState],
        samples: &[Option<SignalSample>],
        iteration: usize,
        order: &[usize],
    ) -> Result<Vec<AgentState>> {
        if states.len() != self.agents.len() || samples.len() != self.agents.len() {
            return Err(Error::Dimension {
                expected: self.agents.len(),
                found: states.len().min(samples.len()),
            });
        }
        let previous: Vec<&[f64]> = self.adaptive.iter().map(|&k| &states[k].w[..]).collect();

        // phase 1: combine, from iteration i-1 estimates only
        let psis = self
            .adaptive
            .iter()
            .enumerate()
            .map(|(t, _)| combine_unchecked(self.trust.row(t), &previous))
            .collect::<Result<Vec<_>>>()?;

        // phase 2: adapt
        let mut next = states.to_vec();
        for &k in order {
            let t = self.slot[k].ok_or_else(|| {
                Error::Config(format!("agent {} is not adaptive", self.agents[k].id))
            })?;
            let agent = &self.agents[k];
            let sample = samples[k].as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "no sample for agent {} at iteration {iteration}",
                    agent.id
                ))
            })?;
            let psi = psis[t].clone();
            let (w, e) = lms_step(&psi, &sample.x, sample.y, agent.mu)
                .map_err(|err| err.at_iteration(&agent.id, iteration))?;
            next[k] = AgentState { w, psi, e };
        }
        self.update_averaging(&mut next)?;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agents(mu: f64, trust: Vec<Vec<f64>>) -> Network {
        Network::new(
            vec![
                NetworkAgent {
                    id: "a".into(),
                    kind: AgentKind::Cooperative,
                    mu,
                },
                NetworkAgent {
                    id: "b".into(),
                    kind: AgentKind::Cooperative,
                    mu,
                },
            ],
            TrustMatrix::from_rows(trust).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn combine_examples() {
        let w = combine(&[0.5, 0.5], &[&[0.0], &[1.0]]).unwrap();
        assert_eq!(w.0, vec![0.5]);
        let w = combine(&[1.0, 0.0], &[&[0.3], &[1.0]]).unwrap();
        assert_eq!(w.0, vec![0.3]);
        let w = combine(&[0.9, 0.1], &[&[0.0], &[1.0]]).unwrap();
        assert_eq!(w.0, vec![0.1]);
    }

    #[test]
    fn combine_rejects_bad_rows() {
        assert!(matches!(
            combine(&[0.6, 0.6], &[&[0.0], &[1.0]]),
            Err(Error::Config(_))
        ));
        assert!(combine(&[1.5, -0.5], &[&[0.0], &[1.0]]).is_err());
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_combine(&[0.3], &[0.9], 0.0).0, vec![0.3]);
        assert_eq!(pairwise_combine(&[0.3], &[0.9], 1.0).0, vec![0.9]);
    }

    #[test]
    fn averaging_examples() {
        assert_eq!(averaging_update(&[&[0.0], &[1.0]]).unwrap().0, vec![0.5]);
        assert_eq!(averaging_update(&[&[0.37]]).unwrap().0, vec![0.37]);
        let w = averaging_update(&[&[0.2], &[0.4], &[0.9]]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!(averaging_update(&[]).is_err());
    }

    #[test]
    fn trust_matrix_validation() {
        assert!(TrustMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_ok());
        let err = TrustMatrix::from_rows(vec![vec![0.6, 0.6], vec![0.5, 0.5]]).unwrap_err();
        assert!(err.to_string().contains("sum 1.2"), "{err}");
        assert!(TrustMatrix::from_rows(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(TrustMatrix::identity(3).is_identity_row(2));
    }

    #[test]
    fn hand_trace_first_iteration() {
        let net = two_agents(0.5, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let states = net
            .initial_states(&[vec![0.0].into(), vec![1.0].into()])
            .unwrap();
        let sample = SignalSample {
            x: vec![1.0],
            y: 1.0,
            q: 0.0,
        };
        let next = net
            .cta_iteration(&states, &[Some(sample.clone()), Some(sample)], 1)
            .unwrap();
        for s in &next {
            assert_eq!(s.psi.0, vec![0.5]);
            assert_eq!(s.e, 0.5);
            assert_eq!(s.w.0, vec![0.75]);
        }
    }

    #[test]
    fn standalone_must_be_identity() {
        let err = Network::new(
            vec![
                NetworkAgent {
                    id: "c".into(),
                    kind: AgentKind::Standalone,
                    mu: 0.5,
                },
                NetworkAgent {
                    id: "d".into(),
                    kind: AgentKind::Cooperative,
                    mu: 0.5,
                },
            ],
            TrustMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn averaging_source_must_be_adaptive() {
        let err = Network::new(
            vec![
                NetworkAgent {
                    id: "c".into(),
                    kind: AgentKind::Standalone,
                    mu: 0.5,
                },
                NetworkAgent {
                    id: "e".into(),
                    kind: AgentKind::Averaging(vec![1]),
                    mu: 0.0,
                },
            ],
            TrustMatrix::identity(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn divergence_names_agent_and_iteration() {
        let net = two_agents(0.5, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let states = net
            .initial_states(&[vec![0.0].into(), vec![0.0].into()])
            .unwrap();
        let ok = SignalSample {
            x: vec![1.0],
            y: 1.0,
            q: 0.0,
        };
        let bad = SignalSample {
            x: vec![1.0],
            y: f64::INFINITY,
            q: 0.0,
        };
        let err = net
            .cta_iteration(&states, &[Some(ok), Some(bad)], 7)
            .unwrap_err();
        match err {
            Error::Divergence { site, .. } => {
                assert_eq!(site.agent.as_deref(), Some("b"));
                assert_eq!(site.iteration, Some(7));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
