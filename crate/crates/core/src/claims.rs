//! Statistical predicates turning the qualitative two-agent observations
//! into pass/fail checks over an ensemble of paired runs.

use std::fmt;
use std::str::FromStr;

use crate::ensemble::Simulation;
use crate::error::{Error, Result};
use crate::filter::squared_distance;
use crate::metrics::{
    convergence_iteration, crossing_iteration, default_band, dominance_onset,
    steady_state_variance, RunRecord, DEFAULT_WINDOW_FRACTION,
};
use crate::scenario::{AgentRole, Scenario};

/// Merge: tolerance on the ensemble-mean gap, relative to the distance
/// between the mean cooperative start and `w_opt`.
pub const MERGE_RELATIVE_GAP: f64 = 0.05;
/// Merge: the gap is checked from this iteration on.
pub const MERGE_FROM_ITERATION: usize = 10;
/// Delay: agents count as merged once closer than this fraction of `|w_opt|`.
pub const DELAY_RELATIVE_GAP: f64 = 0.01;
pub const SPEEDUP_MIN_FRACTION: f64 = 0.9;
pub const CROSSING_MIN_FRACTION: f64 = 0.9;
pub const DELAY_MIN_FRACTION: f64 = 0.9;
pub const STABILIZE_MIN_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Merge,
    Speedup,
    Crossing,
    Delay,
    Stabilize,
}

impl Claim {
    pub const ALL: [Claim; 5] = [
        Claim::Merge,
        Claim::Speedup,
        Claim::Crossing,
        Claim::Delay,
        Claim::Stabilize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::Merge => "merge",
            Claim::Speedup => "speedup",
            Claim::Crossing => "crossing",
            Claim::Delay => "delay",
            Claim::Stabilize => "stabilize",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown claim `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimOutcome {
    pub claim: Claim,
    pub passed: bool,
    pub measurements: Vec<(String, String)>,
}

impl ClaimOutcome {
    fn new(claim: Claim, passed: bool) -> Self {
        Self {
            claim,
            passed,
            measurements: Vec::new(),
        }
    }

    fn measure(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.measurements.push((name.to_owned(), value.to_string()));
        self
    }
}

impl fmt::Display for ClaimOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            self.claim,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        for (k, v) in &self.measurements {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn usage(claim: Claim, message: impl fmt::Display) -> Error {
    Error::Config(format!("claim `{claim}` not applicable: {message}"))
}

/// Agent roles used by the claims, as roster indices.
#[derive(Debug, Clone)]
struct Roles {
    cooperative: Vec<usize>,
    /// `(cooperative, standalone twin)` pairs.
    twins: Vec<(usize, usize)>,
    averaging: Option<usize>,
}

impl Roles {
    fn of(s: &Scenario) -> Self {
        let cooperative: Vec<usize> = (0..s.agents.len())
            .filter(|&i| s.agents[i].is_cooperative())
            .collect();
        let mut twins = Vec::new();
        for &c in &cooperative {
            let twin = s.agents.iter().position(|a| match &a.role {
                AgentRole::Standalone(cfg) => cfg.counterpart.as_deref() == Some(&s.agents[c].id),
                _ => false,
            });
            if let Some(t) = twin {
                twins.push((c, t));
            }
        }
        let averaging = s
            .agents
            .iter()
            .position(|a| matches!(a.role, AgentRole::Averaging { .. }));
        Self {
            cooperative,
            twins,
            averaging,
        }
    }

    fn need_pair(&self, claim: Claim) -> Result<()> {
        if self.cooperative.len() < 2 {
            return Err(usage(claim, "needs at least two cooperative agents"));
        }
        Ok(())
    }

    fn need_averaging(&self, claim: Claim) -> Result<usize> {
        self.averaging
            .ok_or_else(|| usage(claim, "needs an averaging agent"))
    }
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

fn adaptive_w0(s: &Scenario, idx: impl IntoIterator<Item = usize>) -> Vec<&[f64]> {
    idx.into_iter()
        .filter_map(|i| s.agents[i].role.adaptive().map(|c| c.w0.as_slice()))
        .collect()
}

/// Default convergence band for `s`: over all adaptive agents.
pub fn scenario_band(s: &Scenario) -> f64 {
    default_band(adaptive_w0(s, s.adaptive_indices()), &s.w_opt)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn median(mut v: Vec<usize>) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[v.len() / 2])
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_owned(), |v| v.to_string())
}

/// `a` strictly earlier than `b`, where absent means never.
fn earlier(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

pub fn evaluate(claim: Claim, scenario: &Scenario) -> Result<ClaimOutcome> {
    match claim {
        Claim::Merge => merge(scenario),
        Claim::Speedup => speedup(scenario),
        Claim::Crossing => crossing(scenario),
        Claim::Delay => delay(scenario),
        Claim::Stabilize => stabilize(scenario),
    }
}

/// Equal trust rows make every cooperative agent combine to the same ψ, and
/// the pair then tracks the averaging agent.
pub fn merge(s: &Scenario) -> Result<ClaimOutcome> {
    let claim = Claim::Merge;
    let roles = Roles::of(s);
    roles.need_pair(claim)?;
    let e = roles.need_averaging(claim)?;
    let trust = s.trust_matrix()?;
    let net = s.network()?;
    let slots: Vec<usize> = roles
        .cooperative
        .iter()
        .map(|&c| net.trust_slot(c).expect("cooperative agents are adaptive"))
        .collect();
    if slots.iter().any(|&t| trust.row(t) != trust.row(slots[0])) {
        return Err(usage(
            claim,
            "cooperative agents must have identical trust rows",
        ));
    }

    let records = Simulation::new(s)?.run_all()?;
    let mut psi_equal = true;
    let mut gap = vec![0.0; s.iterations];
    for rec in &records {
        for i in 1..=rec.iterations() {
            let first = rec.psi(i, roles.cooperative[0]);
            psi_equal &= roles.cooperative.iter().all(|&c| rec.psi(i, c) == first);
            // worst cooperative agent
            let g = roles
                .cooperative
                .iter()
                .map(|&c| squared_distance(rec.w(i, c), rec.w(i, e)).sqrt())
                .fold(0.0, f64::max);
            gap[i - 1] += g;
        }
    }
    gap.iter_mut().for_each(|g| *g /= records.len() as f64);
    let w0 = adaptive_w0(s, roles.cooperative.iter().copied());
    let mut mean0 = vec![0.0; s.dim()];
    for w in &w0 {
        for (m, w) in mean0.iter_mut().zip(w.iter()) {
            *m += w / w0.len() as f64;
        }
    }
    let threshold = MERGE_RELATIVE_GAP * squared_distance(&s.w_opt, &mean0).sqrt();
    let max_gap = gap
        .iter()
        .skip(MERGE_FROM_ITERATION - 1)
        .fold(0.0, |m: f64, &g| m.max(g));
    Ok(ClaimOutcome::new(claim, psi_equal && max_gap < threshold)
        .measure("psi_equal", psi_equal)
        .measure("max_mean_gap", max_gap)
        .measure("threshold", threshold))
}

/// Cooperative agents converge strictly before the averaging agent.
pub fn speedup(s: &Scenario) -> Result<ClaimOutcome> {
    let claim = Claim::Speedup;
    let roles = Roles::of(s);
    roles.need_pair(claim)?;
    let e = roles.need_averaging(claim)?;
    let mus: Vec<f64> = roles
        .cooperative
        .iter()
        .filter_map(|&c| s.agents[c].role.adaptive().map(|a| a.mu))
        .collect();
    if mus.iter().all(|&m| m == mus[0]) {
        return Err(usage(claim, "cooperative learning rates are homogeneous"));
    }
    let band = scenario_band(s);
    let records = Simulation::new(s)?.run_all()?;
    let ids = s.agent_ids();
    let mut hits = 0;
    let mut coop_iters = Vec::new();
    let mut avg_iters = Vec::new();
    for rec in &records {
        let ce = convergence_iteration(rec, &ids[e], band)?;
        let mut all = true;
        for &c in &roles.cooperative {
            let cc = convergence_iteration(rec, &ids[c], band)?;
            all &= earlier(cc, ce);
            coop_iters.extend(cc);
        }
        avg_iters.extend(ce);
        hits += all as usize;
    }
    let frac = fraction(hits, records.len());
    Ok(ClaimOutcome::new(claim, frac >= SPEEDUP_MIN_FRACTION)
        .measure("band", band)
        .measure("fraction", frac)
        .measure("required", SPEEDUP_MIN_FRACTION)
        .measure("median_coop_iter", fmt_opt(median(coop_iters)))
        .measure("median_avg_iter", fmt_opt(median(avg_iters))))
}

/// The standalone twins cross in distance to the optimum, and every
/// cooperative agent eventually stays below the averaging agent's MSD.
pub fn crossing(s: &Scenario) -> Result<ClaimOutcome> {
    let claim = Claim::Crossing;
    let roles = Roles::of(s);
    roles.need_pair(claim)?;
    let e = roles.need_averaging(claim)?;
    if roles.twins.len() < 2 {
        return Err(usage(claim, "needs two standalone twins"));
    }
    if s.dim() != 1 {
        return Err(usage(claim, "needs scalar estimates"));
    }
    let records = Simulation::new(s)?.run_all()?;
    let ids = s.agent_ids();
    let (p, q) = (roles.twins[0].1, roles.twins[1].1);
    let mut cross_hits = 0;
    let mut below_hits = 0;
    let mut crossings = Vec::new();
    let mut onsets = Vec::new();
    for rec in &records {
        if let Some(i) = crossing_iteration(rec, &ids[p], &ids[q])? {
            cross_hits += 1;
            crossings.push(i);
        }
        let avg = rec.squared_distances(e);
        let onset: Option<Vec<usize>> = roles
            .cooperative
            .iter()
            .map(|&c| dominance_onset(&rec.squared_distances(c), &avg))
            .collect();
        if let Some(onset) = onset {
            below_hits += 1;
            onsets.extend(onset.into_iter().max());
        }
    }
    let fc = fraction(cross_hits, records.len());
    let fb = fraction(below_hits, records.len());
    Ok(ClaimOutcome::new(
        claim,
        fc >= CROSSING_MIN_FRACTION && fb >= CROSSING_MIN_FRACTION,
    )
    .measure("crossing_fraction", fc)
    .measure("below_average_fraction", fb)
    .measure("required", CROSSING_MIN_FRACTION)
    .measure("median_crossing_iter", fmt_opt(median(crossings)))
    .measure("median_below_onset", fmt_opt(median(onsets))))
}

/// Same scenario with each cooperative agent spreading its trust evenly
/// over its neighbourhood.
pub fn balanced_trust(s: &Scenario) -> Result<Scenario> {
    let mut out = s.clone();
    let trust = s.trust_matrix()?;
    let net = s.network()?;
    let adaptive = net.adaptive_agents().to_vec();
    for (t, &i) in adaptive.iter().enumerate() {
        if !s.agents[i].is_cooperative() {
            continue;
        }
        let row = trust.row(t);
        let neighbours: Vec<usize> = (0..row.len()).filter(|&b| row[b] > 0.0).collect();
        let share = 1.0 / neighbours.len() as f64;
        out.trust.retain(|entry| entry.from != s.agents[i].id);
        for b in neighbours {
            out.set_trust(&s.agents[i].id, &s.agents[adaptive[b]].id, share);
        }
    }
    Ok(out)
}

fn merge_iteration(rec: &RunRecord, cooperative: &[usize], tolerance: f64) -> Option<usize> {
    (1..=rec.iterations()).find(|&i| {
        cooperative.iter().enumerate().all(|(k, &a)| {
            cooperative[k + 1..]
                .iter()
                .all(|&b| squared_distance(rec.w(i, a), rec.w(i, b)).sqrt() < tolerance)
        })
    })
}

/// Selfish trust postpones the iteration at which cooperative agents
/// coincide, compared with balanced trust on the same signals.
pub fn delay(s: &Scenario) -> Result<ClaimOutcome> {
    let claim = Claim::Delay;
    let roles = Roles::of(s);
    roles.need_pair(claim)?;
    let trust = s.trust_matrix()?;
    let net = s.network()?;
    let selfish = roles.cooperative.iter().any(|&c| {
        let t = net.trust_slot(c).expect("cooperative agents are adaptive");
        trust.get(t, t) > 0.5
    });
    if !selfish {
        return Err(usage(
            claim,
            "no cooperative agent trusts itself more than 0.5",
        ));
    }
    let balanced = balanced_trust(s)?;
    let tolerance = DELAY_RELATIVE_GAP * norm(&s.w_opt);
    let selfish_runs = Simulation::new(s)?.run_all()?;
    let balanced_runs = Simulation::new(&balanced)?.run_all()?;
    let mut hits = 0;
    let mut sel = Vec::new();
    let mut bal = Vec::new();
    for (a, b) in selfish_runs.iter().zip(&balanced_runs) {
        let ms = merge_iteration(a, &roles.cooperative, tolerance);
        let mb = merge_iteration(b, &roles.cooperative, tolerance);
        hits += earlier(mb, ms) as usize;
        sel.extend(ms);
        bal.extend(mb);
    }
    let frac = fraction(hits, selfish_runs.len());
    Ok(ClaimOutcome::new(claim, frac >= DELAY_MIN_FRACTION)
        .measure("fraction", frac)
        .measure("required", DELAY_MIN_FRACTION)
        .measure("median_merge_iter_selfish", fmt_opt(median(sel)))
        .measure("median_merge_iter_balanced", fmt_opt(median(bal))))
}

/// The noisiest cooperative agent jitters less than its standalone twin.
pub fn stabilize(s: &Scenario) -> Result<ClaimOutcome> {
    let claim = Claim::Stabilize;
    let roles = Roles::of(s);
    roles.need_pair(claim)?;
    let noise = |i: usize| s.agents[i].role.adaptive().map_or(0.0, |c| c.noise.sd);
    let sds: Vec<f64> = roles.cooperative.iter().map(|&c| noise(c)).collect();
    if sds.iter().all(|&v| v == sds[0]) {
        return Err(usage(claim, "cooperative agents perceive equal noise"));
    }
    let (target, twin) = roles
        .twins
        .iter()
        .copied()
        .max_by(|a, b| noise(a.0).total_cmp(&noise(b.0)))
        .ok_or_else(|| usage(claim, "no cooperative agent has a standalone twin"))?;
    let ids = s.agent_ids();
    let records = Simulation::new(s)?.run_all()?;
    let mut hits = 0;
    let (mut vt, mut vw) = (0.0, 0.0);
    for rec in &records {
        let a = steady_state_variance(rec, &ids[target], DEFAULT_WINDOW_FRACTION)?;
        let b = steady_state_variance(rec, &ids[twin], DEFAULT_WINDOW_FRACTION)?;
        hits += (a < b) as usize;
        vt += a / records.len() as f64;
        vw += b / records.len() as f64;
    }
    let frac = fraction(hits, records.len());
    Ok(ClaimOutcome::new(claim, frac >= STABILIZE_MIN_FRACTION)
        .measure("agent", &ids[target])
        .measure("twin", &ids[twin])
        .measure("fraction", frac)
        .measure("required", STABILIZE_MIN_FRACTION)
        .measure("mean_var_agent", vt)
        .measure("mean_var_twin", vw))
}
