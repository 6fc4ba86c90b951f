use serde::{Deserialize, Serialize};

use super::episode::EpisodeResult;
use crate::error::Result;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    seed: u64,
    strategy: String,
    n_qubits: usize,
    sigma_f: f64,
    mu_peak: f64,
    step_at_peak: u64,
    n_max_final: usize,
    wall_time_s: f64,
}

/// Results CSV. With `wall_time = false` the timing column is written as 0
/// so reruns produce identical bytes.
pub fn write_results_csv<W: std::io::Write>(results: &[EpisodeResult], wall_time: bool, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in results {
        out.serialize(Row {
            seed: r.seed,
            strategy: r.strategy.clone(),
            n_qubits: r.n_qubits,
            sigma_f: r.sigma_f,
            mu_peak: r.mu_peak,
            step_at_peak: r.step_at_peak,
            n_max_final: r.n_max_final,
            wall_time_s: if wall_time { r.wall_time_s } else { 0.0 },
        })?;
    }
    if results.is_empty() {
        out.write_record(["seed", "strategy", "n_qubits", "sigma_f", "mu_peak", "step_at_peak", "n_max_final", "wall_time_s"])?;
    }
    out.flush()?;
    Ok(())
}

/// Rows read back lose the `truncated` flag, which the file does not carry.
pub fn read_results_csv<R: std::io::Read>(r: R) -> Result<Vec<EpisodeResult>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        out.push(EpisodeResult {
            seed: row.seed,
            strategy: row.strategy,
            n_qubits: row.n_qubits,
            sigma_f: row.sigma_f,
            mu_peak: row.mu_peak,
            step_at_peak: row.step_at_peak,
            n_max_final: row.n_max_final,
            wall_time_s: row.wall_time_s,
            truncated: false,
        });
    }
    Ok(out)
}
