//! Regression training of the learned schedulers.
//!
//! Each epoch runs a few episodes with the current weights. For every
//! episode the links inside the largest component at the `μ` peak give
//! targets: their realized link error at that step. Inputs are the tokens of
//! the episode's initial state, the state the first scheduling decision sees.
//! One Adam step is taken on the masked mean-squared error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::qubit::encode_qubit_tokens;
use super::tokens::{encode_tokens, TokenSequence};
use super::{Net, Variant};
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::harness::{build_policy, run_episode, with_pool, EpisodeFactory, EpisodeOptions};
use crate::metrics::link_error;
use crate::schedulers::{StrategyConfig, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub episodes_per_epoch: usize,
    pub mixing_weight: f64,
    pub rng_seed: u64,
    /// Epochs in the running average of `μ` used to pick the kept weights.
    pub average_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 3000, learning_rate: 3e-3, episodes_per_epoch: 4, mixing_weight: 0.1, rng_seed: 0, average_window: 10 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.mixing_weight) {
            return Err(Error::Config(format!("mixing_weight must be in [0, 1], got {}", self.mixing_weight)));
        }
        if self.episodes_per_epoch == 0 || self.average_window == 0 {
            return Err(Error::Config("episodes_per_epoch and average_window must be positive".into()));
        }
        Ok(())
    }
}

/// One regression example; `mask[k]` selects the outputs that count.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tokens: TokenSequence,
    pub target: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Mean squared error over the masked outputs and its gradient. No masked
/// output gives zero loss.
pub fn masked_mse(y: &[f64], target: &[f64], mask: &[bool]) -> Result<(f64, Vec<f64>)> {
    if y.len() != target.len() || y.len() != mask.len() {
        return Err(Error::Shape(format!(
            "prediction, target and mask lengths differ: {}, {}, {}",
            y.len(),
            target.len(),
            mask.len()
        )));
    }
    let count = mask.iter().filter(|m| **m).count();
    let mut dy = vec![0.0; y.len()];
    if count == 0 {
        return Ok((0.0, dy));
    }
    let mut loss = 0.0;
    for k in 0..y.len() {
        if mask[k] {
            let d = y[k] - target[k];
            loss += d * d;
            dy[k] = 2.0 * d / count as f64;
        }
    }
    Ok((loss / count as f64, dy))
}

/// Realized link error of every link inside the largest component of `peak`.
fn cluster_links(peak: &EnvState) -> Vec<(usize, usize, f64)> {
    let t_mem = peak.config.t_mem_steps;
    let (_, members) = peak.largest_component();
    let mut inside = vec![false; peak.n_qubits()];
    for m in members {
        inside[m] = true;
    }
    peak.progress
        .iter()
        .filter(|e| inside[e.qubit_i] && inside[e.qubit_j])
        .map(|e| {
            let f = peak.preinfo.f(e.qubit_i, e.qubit_j);
            (e.qubit_i, e.qubit_j, link_error(f, (peak.step - e.success_step) as f64, t_mem))
        })
        .collect()
}

/// Pair-token sample: both orderings of every cluster link are targets.
pub fn pair_sample(initial: &EnvState, peak: &EnvState) -> Sample {
    let n = initial.n_qubits();
    let tokens = encode_tokens(initial, &initial.preinfo, initial.config.t_mem_steps);
    let mut target = vec![0.0; n * n];
    let mut mask = vec![false; n * n];
    for (i, j, err) in cluster_links(peak) {
        for r in [i * n + j, j * n + i] {
            target[r] = err;
            mask[r] = true;
        }
    }
    Sample { tokens, target, mask }
}

/// Qubit-token sample: each cluster qubit's target is the mean error of its
/// cluster links.
pub fn qubit_sample(initial: &EnvState, peak: &EnvState) -> Sample {
    let n = initial.n_qubits();
    let tokens = encode_qubit_tokens(initial, &initial.preinfo, initial.config.t_mem_steps, None);
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (i, j, err) in cluster_links(peak) {
        for q in [i, j] {
            sum[q] += err;
            count[q] += 1;
        }
    }
    let target = (0..n).map(|q| if count[q] > 0 { sum[q] / count[q] as f64 } else { 0.0 }).collect();
    let mask = count.iter().map(|&c| c > 0).collect();
    Sample { tokens, target, mask }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_mu: f64,
    pub loss: f64,
    pub running_mu: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights with the best running-average `μ`.
    pub best: Net,
    pub best_epoch: usize,
    pub best_running_mu: f64,
    pub last: Net,
    pub history: Vec<EpochStats>,
}

pub fn strategy_for(variant: Variant) -> StrategyKind {
    match variant {
        Variant::QuPairs => StrategyKind::TransformerQuPairs,
        Variant::Qubit => StrategyKind::TransformerQubit,
        Variant::Fc => StrategyKind::Fc,
    }
}

/// Train `net` on episodes from `factory`. Episode `k` of the run uses the
/// factory seeds `(train.rng_seed, k)`.
pub fn train(
    factory: &EpisodeFactory,
    strategy: &StrategyConfig,
    mut net: Net,
    train: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    train.validate()?;
    let strategy = StrategyConfig { kind: strategy_for(net.variant()), ..*strategy };
    let mut adam = Adam::new(net.params().len(), train.learning_rate);
    let mut history: Vec<EpochStats> = Vec::with_capacity(train.epochs);
    let mut best: Option<(Net, usize, f64)> = None;
    let e_count = train.episodes_per_epoch;
    for epoch in 0..train.epochs {
        let model = net.to_model();
        let episodes: Vec<(f64, Sample)> = with_pool(|| {
            (0..e_count)
                .into_par_iter()
                .map(|e| {
                    let setup = factory.setup(train.rng_seed, (epoch * e_count + e) as u64)?;
                    let initial = EnvState::new(setup.config, setup.preinfo.clone())?;
                    let mut policy = build_policy(
                        &strategy,
                        &setup.preinfo,
                        setup.config.t_mem_steps,
                        Some(&model),
                        train.mixing_weight,
                        setup.policy_seed,
                    )?;
                    let options = EpisodeOptions { keep_peak_state: true, sigma_f: factory.sigma_f() };
                    let ep = run_episode(setup.config, setup.preinfo, &strategy, policy.as_mut(), options)?;
                    let peak = ep.peak_state.as_ref().expect("peak state requested");
                    let sample = match net.variant() {
                        Variant::Qubit => qubit_sample(&initial, peak),
                        _ => pair_sample(&initial, peak),
                    };
                    Ok((ep.result.mu_peak, sample))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let grads: Vec<(f64, Vec<f64>)> = with_pool(|| {
            episodes
                .par_iter()
                .map(|(_, s)| {
                    let mut g = vec![0.0; net.params().len()];
                    let loss = net.loss_grad(s, &mut g)?;
                    Ok((loss, g))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let scale = 1.0 / e_count as f64;
        let mut grad = vec![0.0; net.params().len()];
        let mut loss = 0.0;
        for (l, g) in &grads {
            loss += l * scale;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b * scale;
            }
        }
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!("non-finite loss or gradient at epoch {epoch} (loss {loss})")));
        }
        let mean_mu = episodes.iter().map(|(m, _)| m).sum::<f64>() * scale;
        let window = &history[history.len().saturating_sub(train.average_window - 1)..];
        let running_mu = (window.iter().map(|h| h.mean_mu).sum::<f64>() + mean_mu) / (window.len() + 1) as f64;
        let stats = EpochStats { epoch, mean_mu, loss, running_mu };
        on_epoch(&stats);
        history.push(stats);
        if best.as_ref().is_none_or(|(_, _, b)| running_mu > *b) {
            best = Some((net.clone(), epoch, running_mu));
        }
        adam.step(net.params_mut(), &grad);
    }
    let (best, best_epoch, best_running_mu) = best.unwrap_or_else(|| (net.clone(), 0, f64::NAN));
    Ok(TrainOutcome { best, best_epoch, best_running_mu, last: net, history })
}
