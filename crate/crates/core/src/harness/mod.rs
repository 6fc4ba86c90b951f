//! Episodes, batches, sweeps and their statistics.

pub mod episode;
pub mod policies;
pub mod results;
pub mod stats;
pub mod sweep;

use std::sync::Arc;

use rayon::prelude::*;

use crate::agents::Model;
use crate::env::SimConfig;
use crate::error::{Error, Result};
use crate::preinfo::{generate_preinfo, GenParams, PreInfo};
use crate::rng::derive_seed;
use crate::schedulers::StrategyConfig;

pub use episode::{run_episode, Episode, EpisodeOptions, EpisodeResult, Policy};
pub use policies::{build_policy, GreedyPolicy, MstPolicy, RandomPolicy};
pub use results::{read_results_csv, write_results_csv};
pub use stats::{compare_strategies, paired_test, summarize, summarize_results, PairedTest, StatsSummary};
pub use sweep::{run_sweep, write_sweep_csv, SweepAxis, SweepRow, SweepSpec};

/// Environment variable capping the worker threads of batch runs.
pub const THREADS_ENV: &str = "ENTSCHED_THREADS";

#[derive(Debug, Clone)]
pub enum PreinfoSource {
    /// Fresh pre-information per episode, seeded from the episode index.
    Generate(GenParams),
    /// The same pre-information for every episode.
    Fixed(Arc<PreInfo>),
}

/// Builds the environment of episode `k` of a batch.
#[derive(Debug, Clone)]
pub struct EpisodeFactory {
    pub sim: SimConfig,
    pub source: PreinfoSource,
}

#[derive(Debug, Clone)]
pub struct EpisodeSetup {
    pub config: SimConfig,
    pub preinfo: Arc<PreInfo>,
    pub policy_seed: u64,
}

impl EpisodeFactory {
    pub fn new(sim: SimConfig, source: PreinfoSource) -> Self {
        Self { sim, source }
    }

    /// Seeds are derived from `(base_seed, k)` only, so episodes can run in
    /// any order.
    pub fn setup(&self, base_seed: u64, k: u64) -> Result<EpisodeSetup> {
        let config = SimConfig { rng_seed: derive_seed(base_seed, "episode", k), ..self.sim };
        let preinfo = match &self.source {
            PreinfoSource::Generate(g) => {
                let g = GenParams { rng_seed: derive_seed(base_seed, "preinfo", k), ..*g };
                Arc::new(generate_preinfo(&g, self.sim.n_qubits)?)
            }
            PreinfoSource::Fixed(p) => p.clone(),
        };
        Ok(EpisodeSetup { config, preinfo, policy_seed: derive_seed(base_seed, "policy", k) })
    }

    /// `σ(F)` recorded with results.
    pub fn sigma_f(&self) -> f64 {
        match &self.source {
            PreinfoSource::Generate(g) => g.sigma_fidelity,
            PreinfoSource::Fixed(_) => f64::NAN,
        }
    }
}

#[derive(Clone, Copy)]
pub struct BatchSpec<'a> {
    pub factory: &'a EpisodeFactory,
    pub strategy: StrategyConfig,
    pub model: Option<&'a Model>,
    pub mixing_weight: f64,
    pub n_episodes: usize,
    pub base_seed: u64,
    pub parallel: bool,
}

/// Run episode `k` of a batch.
pub fn run_indexed(spec: &BatchSpec<'_>, k: u64, options: EpisodeOptions) -> Result<Episode> {
    let setup = spec.factory.setup(spec.base_seed, k)?;
    let t_mem = setup.config.t_mem_steps;
    let mut policy =
        build_policy(&spec.strategy, &setup.preinfo, t_mem, spec.model, spec.mixing_weight, setup.policy_seed)?;
    run_episode(setup.config, setup.preinfo, &spec.strategy, policy.as_mut(), options)
}

/// Episodes `0..n_episodes`, returned in index order whether run in
/// parallel or not.
pub fn run_batch(spec: &BatchSpec<'_>) -> Result<Vec<EpisodeResult>> {
    if spec.n_episodes == 0 {
        return Err(Error::Config("a batch needs at least one episode".into()));
    }
    let options = EpisodeOptions { keep_peak_state: false, sigma_f: spec.factory.sigma_f() };
    let one = |k: usize| run_indexed(spec, k as u64, options).map(|e| e.result);
    if spec.parallel {
        with_pool(|| (0..spec.n_episodes).into_par_iter().map(one).collect())
    } else {
        (0..spec.n_episodes).map(one).collect()
    }
}

/// Run `f` on a pool sized by `ENTSCHED_THREADS`, or rayon's default pool
/// when the variable is unset.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
