//! Link and cluster errors and the cluster-state quantum volume `μ`.

use serde::{Deserialize, Serialize};

use crate::env::EnvState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub n_max: usize,
    pub epsilon: f64,
    pub mu: f64,
}

/// `1 − F exp(−elapsed / t_mem)`.
pub fn link_error(fidelity: f64, elapsed_steps: f64, t_mem_steps: f64) -> f64 {
    1.0 - fidelity * (-elapsed_steps / t_mem_steps).exp()
}

/// Error a link is expected to carry one attempt-time `1/R` after creation.
/// Zero success probability is the worst cost, 1.
pub fn expected_link_error(fidelity: f64, success_prob: f64, t_mem_steps: f64) -> f64 {
    if success_prob > 0.0 {
        1.0 - fidelity * (-1.0 / (success_prob * t_mem_steps)).exp()
    } else {
        1.0
    }
}

/// Sum of link errors over the established links inside the largest
/// component.
pub fn cluster_error(state: &EnvState, t_mem_steps: f64) -> f64 {
    let (_, members) = state.largest_component();
    let mut inside = vec![false; state.n_qubits()];
    for &m in &members {
        inside[m] = true;
    }
    state
        .progress
        .iter()
        .filter(|e| inside[e.qubit_i] && inside[e.qubit_j])
        .map(|e| {
            let f = state.preinfo.f(e.qubit_i, e.qubit_j);
            link_error(f, (state.step - e.success_step) as f64, t_mem_steps)
        })
        .sum()
}

/// `min(n, 1/(n ε))`, with `ε = 0` giving `n`.
pub fn mu(n_max: usize, epsilon: f64) -> f64 {
    let n = n_max as f64;
    if epsilon > 0.0 {
        n.min(1.0 / (n * epsilon))
    } else {
        n
    }
}

/// Metric snapshot of the current state.
pub fn trajectory_point(state: &EnvState, t_mem_steps: f64) -> TrajectoryPoint {
    let epsilon = cluster_error(state, t_mem_steps);
    let n_max = state.n_max();
    TrajectoryPoint { step: state.step, n_max, epsilon, mu: mu(n_max, epsilon) }
}

/// Largest `μ` and the earliest step reaching it.
pub fn peak_mu(trajectory: &[TrajectoryPoint]) -> Result<(f64, u64)> {
    let mut it = trajectory.iter();
    let first = it.next().ok_or_else(|| Error::Stats("empty trajectory".into()))?;
    let mut best = (first.mu, first.step);
    for p in it {
        if p.mu > best.0 {
            best = (p.mu, p.step);
        }
    }
    Ok(best)
}

/// Trajectory CSV: `step,n_max,epsilon,mu`.
pub fn write_trajectory_csv<W: std::io::Write>(trajectory: &[TrajectoryPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "n_max", "epsilon", "mu"])?;
    for p in trajectory {
        out.serialize((p.step, p.n_max, p.epsilon, p.mu))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: std::io::Read>(r: R) -> Result<Vec<TrajectoryPoint>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in reader.deserialize::<(u64, usize, f64, f64)>() {
        let (step, n_max, epsilon, mu) = rec?;
        out.push(TrajectoryPoint { step, n_max, epsilon, mu });
    }
    Ok(out)
}
