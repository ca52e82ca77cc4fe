//! Trajectory storage and post-processing: mean-square deviation,
//! steady-state variance, convergence and crossing iterations.

use crate::error::{Error, Result};
use crate::filter::squared_distance;
use crate::network::AgentState;

/// Full trajectory of one run. Iterations are numbered from 1.
///
/// Equality is bitwise on the stored floats, so NaN errors of averaging
/// agents compare equal.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub w_opt: Vec<f64>,
    agent_ids: Vec<String>,
    iterations: usize,
    // flattened [iteration][agent][component]
    w: Vec<f64>,
    psi: Vec<f64>,
    // flattened [iteration][agent]
    e: Vec<f64>,
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(a, b)| a.to_bits() == b.to_bits())
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        self.run == other.run
            && self.seed == other.seed
            && self.agent_ids == other.agent_ids
            && self.iterations == other.iterations
            && bits_eq(&self.w_opt, &other.w_opt)
            && bits_eq(&self.w, &other.w)
            && bits_eq(&self.psi, &other.psi)
            && bits_eq(&self.e, &other.e)
    }
}

impl RunRecord {
    pub fn new(run: usize, seed: u64, w_opt: Vec<f64>, agent_ids: Vec<String>) -> Self {
        Self {
            run,
            seed,
            w_opt,
            agent_ids,
            iterations: 0,
            w: Vec::new(),
            psi: Vec::new(),
            e: Vec::new(),
        }
    }

    pub fn with_capacity(mut self, iterations: usize) -> Self {
        let n = self.agent_ids.len();
        let m = self.dim();
        self.w.reserve(iterations * n * m);
        self.psi.reserve(iterations * n * m);
        self.e.reserve(iterations * n);
        self
    }

    /// Appends the states of the next iteration.
    pub fn push(&mut self, states: &[AgentState]) -> Result<()> {
        if states.len() != self.agent_ids.len() {
            return Err(Error::Dimension {
                expected: self.agent_ids.len(),
                found: states.len(),
            });
        }
        let m = self.dim();
        for s in states {
            if s.w.dim() != m || s.psi.dim() != m {
                return Err(Error::Dimension {
                    expected: m,
                    found: s.w.dim(),
                });
            }
            self.w.extend_from_slice(&s.w);
            self.psi.extend_from_slice(&s.psi);
            self.e.push(s.e);
        }
        self.iterations += 1;
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dim(&self) -> usize {
        self.w_opt.len()
    }

    pub fn agent_ids(&self) -> &[String] {
        &self.agent_ids
    }

    pub fn agent_index(&self, id: &str) -> Result<usize> {
        self.agent_ids
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::Config(format!("no agent `{id}` in record")))
    }

    fn offset(&self, iteration: usize, agent: usize) -> usize {
        assert!(
            (1..=self.iterations).contains(&iteration),
            "iteration {iteration} outside 1..={}",
            self.iterations
        );
        (iteration - 1) * self.agent_ids.len() + agent
    }

    pub fn w(&self, iteration: usize, agent: usize) -> &[f64] {
        let m = self.dim();
        let o = self.offset(iteration, agent) * m;
        &self.w[o..o + m]
    }

    pub fn psi(&self, iteration: usize, agent: usize) -> &[f64] {
        let m = self.dim();
        let o = self.offset(iteration, agent) * m;
        &self.psi[o..o + m]
    }

    pub fn e(&self, iteration: usize, agent: usize) -> f64 {
        self.e[self.offset(iteration, agent)]
    }

    /// `|w(i) − w_opt|` for `i = 1..=L`.
    pub fn distances(&self, agent: usize) -> Vec<f64> {
        (1..=self.iterations)
            .map(|i| squared_distance(self.w(i, agent), &self.w_opt).sqrt())
            .collect()
    }

    pub fn squared_distances(&self, agent: usize) -> Vec<f64> {
        (1..=self.iterations)
            .map(|i| squared_distance(self.w(i, agent), &self.w_opt))
            .collect()
    }

    /// Record whose `w`, `psi` and `e` are the element-wise means over
    /// `records`.
    pub fn ensemble_mean(records: &[RunRecord]) -> Result<RunRecord> {
        let first = records.first().ok_or(Error::EmptyDataset)?;
        check_shapes(records)?;
        let n = records.len() as f64;
        let mean_of = |pick: fn(&RunRecord) -> &Vec<f64>| -> Vec<f64> {
            let mut acc = vec![0.0; pick(first).len()];
            for r in records {
                for (a, v) in acc.iter_mut().zip(pick(r)) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        };
        Ok(RunRecord {
            run: 0,
            seed: first.seed,
            w_opt: first.w_opt.clone(),
            agent_ids: first.agent_ids.clone(),
            iterations: first.iterations,
            w: mean_of(|r| &r.w),
            psi: mean_of(|r| &r.psi),
            e: mean_of(|r| &r.e),
        })
    }
}

fn check_shapes(records: &[RunRecord]) -> Result<()> {
    let first = &records[0];
    for r in &records[1..] {
        if r.agent_ids != first.agent_ids || r.w_opt != first.w_opt {
            return Err(Error::Config(
                "records come from different scenarios".into(),
            ));
        }
        if r.iterations != first.iterations {
            return Err(Error::Dimension {
                expected: first.iterations,
                found: r.iterations,
            });
        }
    }
    Ok(())
}

/// Ensemble mean of `|w(i) − w_opt|²` for each iteration.
pub fn msd_series(records: &[RunRecord], agent: &str) -> Result<Vec<f64>> {
    let first = records.first().ok_or(Error::EmptyDataset)?;
    check_shapes(records)?;
    let idx = first.agent_index(agent)?;
    let mut msd = vec![0.0; first.iterations];
    for r in records {
        for (acc, d) in msd.iter_mut().zip(r.squared_distances(idx)) {
            *acc += d;
        }
    }
    let n = records.len() as f64;
    msd.iter_mut().for_each(|m| *m /= n);
    Ok(msd)
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Config(format!(
            "variance needs at least 2 samples, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
}

/// Sample variance of `w` over the final `⌈window_fraction·L⌉` iterations,
/// summed over components.
pub fn steady_state_variance(record: &RunRecord, agent: &str, window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "window fraction {window_fraction} outside (0, 1]"
        )));
    }
    let idx = record.agent_index(agent)?;
    let total = record.iterations();
    let window = ((window_fraction * total as f64).ceil() as usize).min(total);
    let start = total - window + 1;
    (0..record.dim())
        .map(|c| {
            let series: Vec<f64> = (start..=total).map(|i| record.w(i, idx)[c]).collect();
            sample_variance(&series)
        })
        .sum()
}

/// Smallest `i` with `|w(j) − w_opt| ≤ band` for every `j ≥ i`.
pub fn convergence_iteration(record: &RunRecord, agent: &str, band: f64) -> Result<Option<usize>> {
    if !(band > 0.0) {
        return Err(Error::Config(format!("band must be positive, got {band}")));
    }
    let idx = record.agent_index(agent)?;
    Ok(settled_from(&record.distances(idx), |d| d <= band))
}

/// First iteration (1-based) of the trailing run of values satisfying `pred`.
fn settled_from(series: &[f64], pred: impl Fn(f64) -> bool) -> Option<usize> {
    let outside = series.iter().rposition(|&d| !pred(d));
    match outside {
        None if series.is_empty() => None,
        None => Some(1),
        Some(last) if last + 1 == series.len() => None,
        Some(last) => Some(last + 2),
    }
}

/// First iteration where the sign of `|w_p − w_opt| − |w_q − w_opt|`
/// differs from its sign at iteration 1. Scalar estimates only.
pub fn crossing_iteration(
    record: &RunRecord,
    agent_p: &str,
    agent_q: &str,
) -> Result<Option<usize>> {
    if record.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "crossing detection needs scalar estimates, got dimension {}",
            record.dim()
        )));
    }
    let p = record.distances(record.agent_index(agent_p)?);
    let q = record.distances(record.agent_index(agent_q)?);
    let sign = |i: usize| (p[i] - q[i]).partial_cmp(&0.0);
    if p.is_empty() {
        return Ok(None);
    }
    let initial = sign(0);
    Ok((1..p.len()).find(|&i| sign(i) != initial).map(|i| i + 1))
}

/// Smallest `i` such that `p(j) < q(j)` for every `j ≥ i`.
pub fn dominance_onset(p: &[f64], q: &[f64]) -> Option<usize> {
    let below: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(p, q)| if p < q { 1.0 } else { 0.0 })
        .collect();
    settled_from(&below, |b| b > 0.5)
}

/// Variance of `s_ab·x + s_ba·y`.
pub fn weighted_sum_variance(s_ab: f64, s_ba: f64, var_x: f64, var_y: f64, cov_xy: f64) -> f64 {
    s_ab * s_ab * var_x + s_ba * s_ba * var_y + 2.0 * s_ab * s_ba * cov_xy
}

/// Default convergence band: a tenth of the distance between the mean
/// initial estimate and `w_opt`.
pub fn default_band<'a>(initial: impl IntoIterator<Item = &'a [f64]>, w_opt: &[f64]) -> f64 {
    let mut mean = vec![0.0; w_opt.len()];
    let mut n = 0usize;
    for w0 in initial {
        for (m, w) in mean.iter_mut().zip(w0) {
            *m += w;
        }
        n += 1;
    }
    if n > 0 {
        mean.iter_mut().for_each(|m| *m /= n as f64);
    }
    0.1 * squared_distance(&mean, w_opt).sqrt()
}

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub p: String,
    pub q: String,
    pub iteration: Option<usize>,
}

/// Ensemble summary. Convergence and crossing iterations are measured on
/// the ensemble-mean trajectory; steady-state variance is the mean of the
/// per-run values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub agents: Vec<String>,
    pub band: f64,
    pub window_fraction: f64,
    pub msd: Vec<Vec<f64>>,
    pub steady_state_var: Vec<f64>,
    pub convergence_iter: Vec<Option<usize>>,
    pub crossing_iter: Vec<Crossing>,
}

impl MetricsReport {
    pub fn compute(records: &[RunRecord], band: f64, window_fraction: f64) -> Result<Self> {
        let mean = RunRecord::ensemble_mean(records)?;
        let agents = mean.agent_ids().to_vec();
        let mut msd = Vec::with_capacity(agents.len());
        let mut steady_state_var = Vec::with_capacity(agents.len());
        let mut convergence_iter = Vec::with_capacity(agents.len());
        for id in &agents {
            msd.push(msd_series(records, id)?);
            let total = records
                .iter()
                .map(|r| steady_state_variance(r, id, window_fraction))
                .sum::<Result<f64>>()?;
            steady_state_var.push(total / records.len() as f64);
            convergence_iter.push(convergence_iteration(&mean, id, band)?);
        }
        let mut crossing_iter = Vec::new();
        if mean.dim() == 1 {
            for (i, p) in agents.iter().enumerate() {
                for q in &agents[i + 1..] {
                    crossing_iter.push(Crossing {
                        p: p.clone(),
                        q: q.clone(),
                        iteration: crossing_iteration(&mean, p, q)?,
                    });
                }
            }
        }
        Ok(Self {
            agents,
            band,
            window_fraction,
            msd,
            steady_state_var,
            convergence_iter,
            crossing_iter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::WeightVector;

    /// Record for a single scalar agent "p" (and optional "q").
    fn scalar_record(w_opt: f64, series: &[&[f64]]) -> RunRecord {
        let ids = ["p", "q", "r"][..series.len()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rec = RunRecord::new(0, 0, vec![w_opt], ids);
        for i in 0..series[0].len() {
            let states: Vec<AgentState> = series
                .iter()
                .map(|s| AgentState::initial(WeightVector(vec![s[i]])))
                .collect();
            rec.push(&states).unwrap();
        }
        rec
    }

    #[test]
    fn msd_examples() {
        let r = scalar_record(2.0, &[&[2.0, 2.0, 2.0]]);
        assert_eq!(msd_series(&[r], "p").unwrap(), vec![0.0; 3]);
        let r = scalar_record(2.0, &[&[0.5]]);
        assert_eq!(msd_series(&[r], "p").unwrap(), vec![2.25]);
        let a = scalar_record(1.0, &[&[0.0]]);
        let b = scalar_record(1.0, &[&[1.0]]);
        assert_eq!(msd_series(&[a, b], "p").unwrap(), vec![0.5]);
        assert_eq!(msd_series(&[], "p"), Err(Error::EmptyDataset));
    }

    #[test]
    fn steady_state_examples() {
        let r = scalar_record(0.0, &[&[3.0; 10]]);
        assert_eq!(steady_state_variance(&r, "p", 0.2).unwrap(), 0.0);
        let r = scalar_record(0.0, &[&[5.0, 5.0, 5.0, 5.0, 0.0, 1.0, 0.0, 1.0]]);
        let v = steady_state_variance(&r, "p", 0.5).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        // window of one sample
        assert!(steady_state_variance(&r, "p", 0.1).is_err());
        assert!(steady_state_variance(&r, "p", 0.0).is_err());
    }

    #[test]
    fn convergence_examples() {
        let r = scalar_record(1.0, &[&[1.0; 5]]);
        assert_eq!(convergence_iteration(&r, "p", 0.1).unwrap(), Some(1));
        let r = scalar_record(1.0, &[&[5.0; 5]]);
        assert_eq!(convergence_iteration(&r, "p", 0.1).unwrap(), None);

        // enters at 10, leaves at 12, re-enters for good at 30
        let series: Vec<f64> = (1..=40)
            .map(|i| {
                if (10..12).contains(&i) || i >= 30 {
                    1.0
                } else {
                    3.0
                }
            })
            .collect();
        let r = scalar_record(1.0, &[&series]);
        assert_eq!(convergence_iteration(&r, "p", 0.5).unwrap(), Some(30));
    }

    #[test]
    fn crossing_examples() {
        let s = [0.0, 0.5, 1.0];
        let r = scalar_record(2.0, &[&s, &s]);
        assert_eq!(crossing_iteration(&r, "p", "q").unwrap(), None);

        let r = scalar_record(2.0, &[&[1.0, 1.5, 1.9], &[0.0, 0.1, 0.2]]);
        assert_eq!(crossing_iteration(&r, "p", "q").unwrap(), None);

        // p starts farther than q and overtakes at iteration 5
        let p = [0.0, 0.4, 0.8, 0.9, 1.5, 2.0];
        let q = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let r = scalar_record(2.0, &[&p, &q]);
        assert_eq!(crossing_iteration(&r, "p", "q").unwrap(), Some(5));

        let mut v = RunRecord::new(0, 0, vec![0.0, 0.0], vec!["p".into(), "q".into()]);
        let st = AgentState::initial(WeightVector(vec![0.0, 0.0]));
        v.push(&[st.clone(), st]).unwrap();
        assert!(matches!(
            crossing_iteration(&v, "p", "q"),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn weighted_sum_examples() {
        let v = weighted_sum_variance(0.5, 0.5, 0.01f64.powi(2), 0.2f64.powi(2), 0.0);
        assert!((v - 0.010025).abs() < 1e-15);
        assert_eq!(weighted_sum_variance(1.0, 0.0, 0.3, 0.7, 0.1), 0.3);
        assert_eq!(weighted_sum_variance(0.5, 0.5, 0.4, 0.4, 0.0), 0.2);
    }

    #[test]
    fn dominance_onset_examples() {
        assert_eq!(dominance_onset(&[1.0, 0.0, 0.0], &[0.5, 0.5, 0.5]), Some(2));
        assert_eq!(dominance_onset(&[0.0, 0.0], &[1.0, 1.0]), Some(1));
        assert_eq!(dominance_onset(&[0.0, 2.0], &[1.0, 1.0]), None);
    }

    #[test]
    fn default_band_example() {
        let w0: [&[f64]; 4] = [&[0.0], &[1.0], &[0.0], &[1.0]];
        assert!((default_band(w0, &[2.0]) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn report_shapes() {
        let a = scalar_record(2.0, &[&[0.0, 1.0, 2.0, 2.0], &[2.0, 2.0, 2.0, 2.0]]);
        let b = scalar_record(2.0, &[&[0.0, 1.0, 1.9, 2.0], &[2.0, 2.0, 2.0, 2.0]]);
        let rep = MetricsReport::compute(&[a, b], 0.2, 0.5).unwrap();
        assert_eq!(rep.msd.len(), 2);
        assert_eq!(rep.convergence_iter, vec![Some(3), Some(1)]);
        assert_eq!(rep.crossing_iter.len(), 1);
    }
}
