//! Cross products of a parameter axis and strategies.

use serde::{Deserialize, Serialize};

use super::stats::{summarize_results, StatsSummary};
use super::{run_batch, BatchSpec, EpisodeFactory, EpisodeResult, PreinfoSource};
use crate::agents::Model;
use crate::env::SimConfig;
use crate::error::{Error, Result};
use crate::preinfo::GenParams;
use crate::schedulers::{StrategyConfig, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SigmaFidelity,
    NQubits,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigma_fidelity" | "sigma-f" | "sigma_f" => Some(SweepAxis::SigmaFidelity),
            "n_qubits" | "n-qubits" => Some(SweepAxis::NQubits),
            _ => None,
        }
    }
}

pub struct SweepSpec<'a> {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub strategies: Vec<StrategyKind>,
    pub sim: SimConfig,
    pub gen: GenParams,
    pub strategy: StrategyConfig,
    pub n_episodes: usize,
    pub base_seed: u64,
    /// One model serves every size of an `N_q` sweep.
    pub model: Option<&'a Model>,
    pub mixing_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub strategy: String,
    pub summary: StatsSummary,
}

/// Every `(value, strategy)` batch, values outermost. All strategies at one
/// value share the base seed, so their episodes see the same environments.
pub fn run_sweep(spec: &SweepSpec<'_>) -> Result<(Vec<EpisodeResult>, Vec<SweepRow>)> {
    if spec.values.is_empty() || spec.strategies.is_empty() {
        return Err(Error::Config("sweep needs at least one value and one strategy".into()));
    }
    if spec.axis == SweepAxis::NQubits && spec.strategies.contains(&StrategyKind::Fc) {
        return Err(Error::UnsupportedTransfer(
            "the fully connected model has a fixed input size and cannot run an n_qubits sweep".into(),
        ));
    }
    let mut all = Vec::new();
    let mut rows = Vec::new();
    for &value in &spec.values {
        let (sim, gen) = match spec.axis {
            SweepAxis::SigmaFidelity => (spec.sim, GenParams { sigma_fidelity: value, ..spec.gen }),
            SweepAxis::NQubits => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(Error::Config(format!("n_qubits sweep value {value} is not an integer ≥ 2")));
                }
                let n = value as usize;
                let workers = spec.sim.max_workers.map(|w| w.min(n / 2));
                (SimConfig { n_qubits: n, max_workers: workers, ..spec.sim }, spec.gen)
            }
        };
        let factory = EpisodeFactory::new(sim, PreinfoSource::Generate(gen));
        for &kind in &spec.strategies {
            let batch = BatchSpec {
                factory: &factory,
                strategy: StrategyConfig { kind, ..spec.strategy },
                model: if kind.needs_model() { spec.model } else { None },
                mixing_weight: spec.mixing_weight,
                n_episodes: spec.n_episodes,
                base_seed: spec.base_seed,
                parallel: true,
            };
            let results = run_batch(&batch)?;
            let summary = summarize_results(&results, sim.stop_fraction)?;
            rows.push(SweepRow { value, strategy: kind.name().to_string(), summary });
            all.extend(results);
        }
    }
    Ok((all, rows))
}

/// One line per sweep row: `value,strategy,n,mean_mu,std_mu,sigma_mu,two_sigma_halfwidth`.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["value", "strategy", "n", "mean_mu", "std_mu", "sigma_mu", "two_sigma_halfwidth"])?;
    for r in rows {
        let s = &r.summary;
        out.write_record([
            r.value.to_string(),
            r.strategy.clone(),
            s.n.to_string(),
            s.mean_mu.to_string(),
            s.std_mu.to_string(),
            s.sigma_mu.to_string(),
            s.two_sigma_halfwidth.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
