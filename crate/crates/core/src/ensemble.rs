//! Ensemble driver: runs a scenario `ensemble` times from independent,
//! reproducible random streams.
//!
//! Run `r` feeds adaptive agent `k` from a stream seeded with
//! `derive_seed(seed ^ r, k)`, where `k` is the agent's trust-matrix slot,
//! or its counterpart's slot for twins. Results are bit-identical whether
//! runs execute sequentially or in parallel.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::filter::WeightVector;
use crate::metrics::RunRecord;
use crate::network::Network;
use crate::prng::{derive_seed, RandomStream};
use crate::scenario::Scenario;
use crate::signal::{generate_sample, GaussianParams, SignalSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
struct Source {
    stream_index: u64,
    input: GaussianParams,
    noise: GaussianParams,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    network: Network,
    sources: Vec<Option<Source>>,
    w0: Vec<WeightVector>,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let network = scenario.network()?;
        let sources = scenario
            .agents
            .iter()
            .zip(scenario.stream_indices())
            .map(|(agent, k)| {
                let c = agent.role.adaptive()?;
                Some(Source {
                    stream_index: k?,
                    input: c.input,
                    noise: c.noise,
                })
            })
            .collect();
        // averaging agents get a placeholder; their start is computed
        let w0 = scenario
            .agents
            .iter()
            .map(|a| match a.role.adaptive() {
                Some(c) => WeightVector(c.w0.clone()),
                None => WeightVector::zeros(scenario.dim()),
            })
            .collect();
        Ok(Self {
            scenario: scenario.clone(),
            network,
            sources,
            w0,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn stream_seed(&self, run: usize, stream_index: u64) -> u64 {
        derive_seed(self.scenario.seed ^ run as u64, stream_index)
    }

    pub fn run_one(&self, run: usize) -> Result<RunRecord> {
        self.run_observed(run, |_, _, _| {})
    }

    /// Runs once, calling `observer(iteration, agent, sample)` for every
    /// sample drawn.
    pub fn run_observed(
        &self,
        run: usize,
        mut observer: impl FnMut(usize, usize, &SignalSample),
    ) -> Result<RunRecord> {
        let s = &self.scenario;
        let mut streams: Vec<Option<RandomStream>> = self
            .sources
            .iter()
            .map(|src| {
                src.as_ref()
                    .map(|src| RandomStream::new(self.stream_seed(run, src.stream_index)))
            })
            .collect();
        let mut record =
            RunRecord::new(run, s.seed, s.w_opt.clone(), s.agent_ids()).with_capacity(s.iterations);
        let mut states = self.network.initial_states(&self.w0)?;
        let mut samples: Vec<Option<SignalSample>> = vec![None; self.sources.len()];
        for i in 1..=s.iterations {
            for (k, (src, stream)) in self.sources.iter().zip(streams.iter_mut()).enumerate() {
                if let (Some(src), Some(stream)) = (src, stream) {
                    let sample = generate_sample(stream, &s.w_opt, &src.input, &src.noise)?;
                    observer(i, k, &sample);
                    samples[k] = Some(sample);
                }
            }
            states = self
                .network
                .cta_iteration(&states, &samples, i)
                .map_err(|e| e.in_run(run))?;
            record.push(&states)?;
        }
        Ok(record)
    }

    /// One result per run, in run order.
    pub fn run_each(&self) -> Vec<Result<RunRecord>> {
        self.run_each_with(Execution::default())
    }

    pub fn run_each_with(&self, execution: Execution) -> Vec<Result<RunRecord>> {
        let runs = 0..self.scenario.ensemble;
        match execution {
            Execution::Sequential => runs.map(|r| self.run_one(r)).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => runs.into_par_iter().map(|r| self.run_one(r)).collect(),
        }
    }

    /// All runs, or the error of the lowest-numbered failing run.
    pub fn run_all(&self) -> Result<Vec<RunRecord>> {
        self.run_each().into_iter().collect()
    }
}

/// Validates and runs `scenario`.
pub fn run(scenario: &Scenario) -> Result<Vec<RunRecord>> {
    Simulation::new(scenario)?.run_all()
}

pub fn run_sequential(scenario: &Scenario) -> Result<Vec<RunRecord>> {
    Simulation::new(scenario)?
        .run_each_with(Execution::Sequential)
        .into_iter()
        .collect()
}

#[cfg(feature = "parallel")]
pub fn run_parallel(scenario: &Scenario) -> Result<Vec<RunRecord>> {
    Simulation::new(scenario)?
        .run_each_with(Execution::Parallel)
        .into_iter()
        .collect()
}
