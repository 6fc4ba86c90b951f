//! One scheduling episode: schedule, step, record, repeat.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvState, SimConfig};
use crate::error::Result;
use crate::metrics::{peak_mu, trajectory_point, TrajectoryPoint};
use crate::preinfo::PreInfo;
use crate::schedulers::{pairs, select_below, ActionMatrix, StallRelease, StrategyConfig};

/// Anything that can propose worker assignments for a state.
pub trait Policy {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix>;

    /// Assignments whose cost is below `threshold`.
    fn propose(&mut self, state: &EnvState, threshold: f64) -> Result<Vec<Action>> {
        Ok(select_below(&self.action_matrix(state)?, state, threshold))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub strategy: String,
    pub n_qubits: usize,
    pub sigma_f: f64,
    pub mu_peak: f64,
    pub step_at_peak: u64,
    pub n_max_final: usize,
    pub wall_time_s: f64,
    /// The episode ended without reaching the stop size.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub result: EpisodeResult,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_state: EnvState,
    /// Snapshot at the first step reaching the peak, when requested.
    pub peak_state: Option<EnvState>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    pub keep_peak_state: bool,
    /// Recorded in the result only.
    pub sigma_f: f64,
}

/// Whether any legal pair, busy or not, clears `threshold`.
fn any_below(matrix: &ActionMatrix, threshold: f64) -> bool {
    let n = matrix.n();
    (0..n).any(|i| (i + 1..n).any(|j| matrix.get(i, j) < threshold))
}

/// One scheduling event. Returns whether anything was assigned.
fn schedule(state: &mut EnvState, policy: &mut dyn Policy, strategy: &StrategyConfig) -> Result<bool> {
    let mut assigned = false;
    loop {
        let matrix = policy.action_matrix(state)?;
        let mut chosen: Vec<Action> =
            pairs(&select_below(&matrix, state, strategy.action_threshold)).map(|(i, j)| Action::Pair(i, j)).collect();
        let release = match strategy.stall {
            StallRelease::Never => false,
            StallRelease::WhenIdle => state.workers.is_empty(),
            StallRelease::Unattainable => state.workers.is_empty() || !any_below(&matrix, strategy.action_threshold),
            StallRelease::Always => true,
        };
        if chosen.is_empty() && release {
            chosen = pairs(&select_below(&matrix, state, f64::INFINITY)).map(|(i, j)| Action::Pair(i, j)).collect();
        }
        if chosen.is_empty() {
            break;
        }
        state.assign_actions(&chosen)?;
        assigned = true;
        if state.scheduling_complete() {
            break;
        }
    }
    Ok(assigned)
}

/// Run an episode to the stop size or the step cap and score it by its peak
/// `μ`.
pub fn run_episode(
    config: SimConfig,
    preinfo: Arc<PreInfo>,
    strategy: &StrategyConfig,
    policy: &mut dyn Policy,
    options: EpisodeOptions,
) -> Result<Episode> {
    let start = Instant::now();
    let t_mem = config.t_mem_steps;
    let mut state = EnvState::new(config, preinfo)?;
    let mut trajectory = vec![trajectory_point(&state, t_mem)];
    let mut best = trajectory[0].mu;
    let mut peak_state = options.keep_peak_state.then(|| state.clone());
    let mut stalled = false;
    schedule(&mut state, policy, strategy)?;
    while !state.is_terminal() {
        if state.workers.is_empty() {
            // nothing in flight and nothing schedulable: the state is frozen
            stalled = true;
            break;
        }
        let changed = !state.step().is_empty();
        let point = trajectory_point(&state, t_mem);
        trajectory.push(point);
        if point.mu > best {
            best = point.mu;
            if options.keep_peak_state {
                peak_state = Some(state.clone());
            }
        }
        if changed && !state.is_terminal() && state.n_idle() >= 2 {
            schedule(&mut state, policy, strategy)?;
        }
    }
    let (mu_peak, step_at_peak) = peak_mu(&trajectory)?;
    let truncated = stalled || state.n_max() as f64 <= state.config.stop_fraction * state.n_qubits() as f64;
    let result = EpisodeResult {
        seed: config.rng_seed,
        strategy: strategy.kind.name().to_string(),
        n_qubits: config.n_qubits,
        sigma_f: options.sigma_f,
        mu_peak,
        step_at_peak,
        n_max_final: state.n_max(),
        wall_time_s: start.elapsed().as_secs_f64(),
        truncated,
    };
    Ok(Episode { result, trajectory, final_state: state, peak_state })
}
