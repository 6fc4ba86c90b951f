//! Discrete-time entanglement environment.
//!
//! Each step every active worker attempts its pair once and succeeds with
//! probability `R_ij`. Successful links are merged into a disjoint-set
//! forest and appended to the progress table.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::preinfo::PreInfo;
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_qubits: usize,
    /// Defaults to `n_qubits / 2`.
    pub max_workers: Option<usize>,
    pub stop_fraction: f64,
    pub max_steps: u64,
    pub allow_intra_component_links: bool,
    /// Memory lifetime in attempt steps.
    pub t_mem_steps: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_qubits: 40,
            max_workers: None,
            stop_fraction: 0.75,
            max_steps: 20_000,
            allow_intra_component_links: false,
            t_mem_steps: DEFAULT_T_MEM_STEPS,
            rng_seed: 0,
        }
    }
}

/// Default memory lifetime in attempt steps.
pub const DEFAULT_T_MEM_STEPS: f64 = 3000.0;

impl SimConfig {
    pub fn with_qubits(n_qubits: usize) -> Self {
        Self { n_qubits, ..Self::default() }
    }

    pub fn workers(&self) -> usize {
        self.max_workers.unwrap_or(self.n_qubits / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::Config(format!("n_qubits must be at least 2, got {}", self.n_qubits)));
        }
        let w = self.workers();
        if w == 0 || w > self.n_qubits / 2 {
            return Err(Error::Config(format!("max_workers must be in [1, {}], got {w}", self.n_qubits / 2)));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return Err(Error::Config(format!("stop_fraction must be in (0, 1], got {}", self.stop_fraction)));
        }
        if !(self.t_mem_steps > 0.0) {
            return Err(Error::Config(format!("t_mem_steps must be positive, got {}", self.t_mem_steps)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressEntry {
    pub qubit_i: usize,
    pub qubit_j: usize,
    pub success_step: u64,
    pub n_max_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Worker {
    pub qubit_i: usize,
    pub qubit_j: usize,
    pub start_step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Pair(usize, usize),
    Idle,
}

impl Action {
    /// Pair with the smaller index first.
    pub fn pair(i: usize, j: usize) -> Self {
        Action::Pair(i.min(j), i.max(j))
    }
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub config: SimConfig,
    pub preinfo: Arc<PreInfo>,
    pub step: u64,
    pub established: Grid<bool>,
    pub workers: Vec<Worker>,
    pub dsu: DisjointSet,
    pub progress: Vec<ProgressEntry>,
    /// Bumped on every mutation; lets callers cache per-state work.
    pub version: u64,
    busy: Vec<bool>,
    rng: StreamRng,
}

impl PartialEq for EnvState {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.preinfo == other.preinfo
            && self.step == other.step
            && self.established == other.established
            && self.workers == other.workers
            && self.dsu == other.dsu
            && self.progress == other.progress
            && self.rng == other.rng
    }
}

impl EnvState {
    pub fn new(config: SimConfig, preinfo: Arc<PreInfo>) -> Result<Self> {
        config.validate()?;
        if preinfo.n_qubits() != config.n_qubits {
            return Err(Error::Dimension { expected: config.n_qubits, actual: preinfo.n_qubits() });
        }
        let n = config.n_qubits;
        Ok(Self {
            config,
            preinfo,
            step: 0,
            established: Grid::filled(n, false),
            workers: Vec::new(),
            dsu: DisjointSet::new(n),
            progress: Vec::new(),
            version: 0,
            busy: vec![false; n],
            rng: stream(config.rng_seed, "env", 0),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.config.n_qubits
    }

    pub fn is_idle(&self, q: usize) -> bool {
        !self.busy[q]
    }

    /// Qubits not taking part in an active attempt, in ascending order.
    pub fn idle_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits()).filter(|&q| !self.busy[q]).collect()
    }

    pub fn n_idle(&self) -> usize {
        self.busy.iter().filter(|b| !**b).count()
    }

    pub fn free_workers(&self) -> usize {
        self.config.workers() - self.workers.len()
    }

    /// Whether `(i, j)` may be attempted at all: distinct, not yet linked and,
    /// unless configured otherwise, in different components.
    pub fn is_legal_pair(&self, i: usize, j: usize) -> bool {
        i != j
            && !self.established.get(i, j)
            && (self.config.allow_intra_component_links || !self.dsu.connected(i, j))
    }

    /// Whether `(i, j)` could be assigned right now.
    pub fn is_assignable(&self, i: usize, j: usize) -> bool {
        self.is_legal_pair(i, j) && !self.busy[i] && !self.busy[j]
    }

    /// Scheduling is complete when the workers are exhausted or no idle
    /// pair can be assigned.
    pub fn scheduling_complete(&self) -> bool {
        if self.free_workers() == 0 {
            return true;
        }
        let idle = self.idle_qubits();
        !idle.iter().enumerate().any(|(a, &i)| idle[a + 1..].iter().any(|&j| self.is_legal_pair(i, j)))
    }

    /// Start an attempt for every `Pair` in `actions`. The batch is checked as
    /// a whole before anything is applied.
    pub fn assign_actions(&mut self, actions: &[Action]) -> Result<()> {
        let mut taken = self.busy.clone();
        let mut count = self.workers.len();
        let reject = |i, j, reason: &str| Err(Error::RejectedAction { i, j, reason: reason.into() });
        for a in actions {
            if let Action::Pair(i, j) = *a {
                let n = self.n_qubits();
                if i >= n || j >= n || i == j {
                    return reject(i, j, "invalid qubit indices");
                }
                if taken[i] || taken[j] {
                    return reject(i, j, "qubit is busy");
                }
                if self.established.get(i, j) {
                    return reject(i, j, "link already established");
                }
                if !self.config.allow_intra_component_links && self.dsu.connected(i, j) {
                    return reject(i, j, "qubits already share a component");
                }
                count += 1;
                if count > self.config.workers() {
                    return reject(i, j, "no free worker");
                }
                taken[i] = true;
                taken[j] = true;
            }
        }
        for a in actions {
            if let Action::Pair(i, j) = *a {
                self.workers.push(Worker { qubit_i: i.min(j), qubit_j: i.max(j), start_step: self.step });
            }
        }
        self.busy = taken;
        self.version += 1;
        Ok(())
    }

    /// Advance one step. Returns the progress entries added.
    pub fn step(&mut self) -> &[ProgressEntry] {
        self.step += 1;
        self.version += 1;
        let before = self.progress.len();
        let mut k = 0;
        while k < self.workers.len() {
            let w = self.workers[k];
            let u: f64 = self.rng.random();
            if u < self.preinfo.r(w.qubit_i, w.qubit_j) {
                self.workers.remove(k);
                self.busy[w.qubit_i] = false;
                self.busy[w.qubit_j] = false;
                self.established.set_sym(w.qubit_i, w.qubit_j, true);
                self.dsu.union(w.qubit_i, w.qubit_j);
                self.progress.push(ProgressEntry {
                    qubit_i: w.qubit_i,
                    qubit_j: w.qubit_j,
                    success_step: self.step,
                    n_max_after: self.dsu.largest_size(),
                });
            } else {
                k += 1;
            }
        }
        &self.progress[before..]
    }

    pub fn n_max(&self) -> usize {
        self.dsu.largest_size()
    }

    /// Largest component and its members; among equal sizes the one holding
    /// the smallest qubit index wins.
    pub fn largest_component(&self) -> (usize, Vec<usize>) {
        let labels = self.dsu.labels();
        let target = self.n_max();
        let root = (0..self.n_qubits())
            .map(|q| labels[q])
            .find(|&r| self.dsu.component_size(r) == target)
            .expect("some component has the largest size");
        let members = (0..self.n_qubits()).filter(|&q| labels[q] == root).collect();
        (target, members)
    }

    pub fn is_terminal(&self) -> bool {
        self.n_max() as f64 > self.config.stop_fraction * self.config.n_qubits as f64
            || self.step >= self.config.max_steps
    }

    /// Progress table as CSV: `step,qubit_i,qubit_j,n_max_after`.
    pub fn write_progress_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "qubit_i", "qubit_j", "n_max_after"])?;
        for e in &self.progress {
            out.serialize((e.success_step, e.qubit_i, e.qubit_j, e.n_max_after))?;
        }
        out.flush()?;
        Ok(())
    }
}
