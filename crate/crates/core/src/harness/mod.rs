//! End-to-end test problems: simulate data, shard it, sample each shard and
//! the full data set.
//!
//! Shard `m` runs its chain with seed `base + m`; the full-data chain uses
//! `base + M`. Results do not depend on thread scheduling.

mod data;
mod gamma;
mod logistic;
mod mh;
mod oracle;

use rayon::prelude::*;

pub use data::{
    partition_rows, simulate_gamma_data, simulate_logistic_data, DataMatrix, GammaProblem,
    LogisticProblem, PAPER_BETA,
};
pub use gamma::{
    sample_gamma_posterior, shape_rate, GammaChain, GammaPosterior, PRIOR_LOWER, PRIOR_UPPER,
};
pub use logistic::{sample_logistic_posterior, LogisticPosterior};
pub use mh::{random_walk_metropolis, LogTarget, MhChain, MhConfig, ACCEPTANCE_BAND};
pub use oracle::{gaussian_product_oracle, simulate_gaussian_bundle};

use crate::bundle::{CombinedSamples, Seed, SubposteriorBundle};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic { beta: Vec<f64> },
    Gamma { alpha: f64, beta: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Logistic { .. } => "logistic",
            Model::Gamma { .. } => "gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub n: usize,
    pub shards: usize,
    /// Chain settings; its seed is the base seed for the whole run.
    pub mh: MhConfig,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub bundle: SubposteriorBundle,
    pub full: CombinedSamples,
    pub shard_acceptance: Vec<f64>,
    pub full_acceptance: f64,
    pub warnings: Vec<String>,
}

struct ChainOutput {
    draws: Vec<f64>,
    acceptance: f64,
    warning: Option<String>,
}

fn run_chain(model: &Model, shard: &DataMatrix, mh: &MhConfig) -> Result<ChainOutput> {
    match model {
        Model::Logistic { beta } => {
            let problem = LogisticProblem::from_data_matrix(shard, beta)?;
            let chain = sample_logistic_posterior(&problem, mh)?;
            Ok(ChainOutput {
                warning: chain.convergence_warning(),
                acceptance: chain.acceptance_rate,
                draws: chain.into_draws(),
            })
        }
        Model::Gamma { .. } => {
            let chain = sample_gamma_posterior(shard.as_slice(), mh)?;
            Ok(ChainOutput {
                warning: chain.mean_sd.convergence_warning(),
                acceptance: chain.mean_sd.acceptance_rate,
                draws: chain.shape_rate,
            })
        }
    }
}

pub fn simulate_data(model: &Model, n: usize, seed: Seed) -> Result<DataMatrix> {
    Ok(match model {
        Model::Logistic { beta } => simulate_logistic_data(n, beta, seed)?.to_data_matrix(),
        Model::Gamma { alpha, beta } => {
            simulate_gamma_data(n, *alpha, *beta, seed)?.to_data_matrix()
        }
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let base = config.mh.seed;
    let data = simulate_data(&config.model, config.n, base)?;
    let shards = partition_rows(&data, config.shards, base)?;
    let m_count = shards.len();
    let mut jobs: Vec<(&DataMatrix, Seed)> = shards
        .iter()
        .enumerate()
        .map(|(m, s)| (s, base.offset(m as u64)))
        .collect();
    jobs.push((&data, base.offset(m_count as u64)));
    let outputs = jobs
        .par_iter()
        .map(|(shard, seed)| run_chain(&config.model, shard, &config.mh.clone().with_seed(*seed)))
        .collect::<Result<Vec<_>>>()?;

    let full_out = &outputs[m_count];
    let d = full_out.draws.len() / config.mh.iterations;
    let mut warnings = Vec::new();
    let mut bundle_values = Vec::with_capacity(d * config.mh.iterations * m_count);
    for (m, out) in outputs[..m_count].iter().enumerate() {
        bundle_values.extend_from_slice(&out.draws);
        if let Some(w) = &out.warning {
            warnings.push(format!("shard {m}: {w}"));
        }
    }
    if let Some(w) = &full_out.warning {
        warnings.push(format!("full data: {w}"));
    }
    Ok(Experiment {
        bundle: SubposteriorBundle::new(bundle_values, d, config.mh.iterations, m_count)?,
        full: CombinedSamples::new(full_out.draws.clone(), d, config.mh.iterations)?,
        shard_acceptance: outputs[..m_count].iter().map(|o| o.acceptance).collect(),
        full_acceptance: full_out.acceptance,
        warnings,
    })
}
