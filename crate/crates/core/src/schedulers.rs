//! Rule-based action matrices and the threshold scheduler shared by every
//! strategy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSet;
use crate::env::{Action, EnvState};
use crate::grid::Grid;
use crate::metrics::expected_link_error;
use crate::preinfo::PreInfo;

/// Cost of a pair that must never be selected.
pub const MASKED: f64 = f64::INFINITY;

/// Default idling threshold `A_th`.
pub const DEFAULT_ACTION_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Random,
    #[serde(rename = "mst")]
    StaticMst,
    Greedy,
    #[serde(rename = "fc")]
    Fc,
    #[serde(rename = "transformer")]
    TransformerQuPairs,
    TransformerQubit,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Random,
        StrategyKind::StaticMst,
        StrategyKind::Greedy,
        StrategyKind::Fc,
        StrategyKind::TransformerQuPairs,
        StrategyKind::TransformerQubit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::StaticMst => "mst",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Fc => "fc",
            StrategyKind::TransformerQuPairs => "transformer",
            StrategyKind::TransformerQubit => "transformer-qubit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn needs_model(self) -> bool {
        matches!(self, StrategyKind::Fc | StrategyKind::TransformerQuPairs | StrategyKind::TransformerQubit)
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    pub action_threshold: f64,
    pub kind: StrategyKind,
    /// What to do when no idle pair clears the threshold.
    pub stall: StallRelease,
}

/// Fallback when no idle pair clears the action threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StallRelease {
    /// Keep idling, even if the environment can never change again.
    Never,
    /// Schedule the cheapest legal pairs once no attempt is running.
    WhenIdle,
    /// Like `WhenIdle`, and also whenever no legal pair at all, busy ones
    /// included, clears the threshold.
    Unattainable,
    /// Schedule the cheapest legal pairs whenever nothing clears.
    Always,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self { action_threshold: DEFAULT_ACTION_THRESHOLD, kind: StrategyKind::Greedy, stall: StallRelease::Unattainable }
    }
}

impl StrategyConfig {
    pub fn of(kind: StrategyKind) -> Self {
        Self { kind, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionMatrix {
    pub cost: Grid<f64>,
}

impl ActionMatrix {
    /// All pairs masked.
    pub fn masked(n: usize) -> Self {
        Self { cost: Grid::filled(n, MASKED) }
    }

    /// Fill every pair the environment allows with `f(i, j)` for `i < j`,
    /// mirrored; everything else stays masked.
    pub fn from_legal(state: &EnvState, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = state.n_qubits();
        let mut m = Self::masked(n);
        for i in 0..n {
            for j in i + 1..n {
                if state.is_legal_pair(i, j) {
                    m.cost.set_sym(i, j, f(i, j));
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.cost.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cost.get(i, j)
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.cost.get(i, j) == MASKED
    }

    pub fn finite_entries(&self) -> usize {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| !self.is_masked(i, j)).count()
    }
}

/// Uniform costs in `[0, A_th)` for every legal pair.
pub fn random_matrix<R: Rng>(state: &EnvState, rng: &mut R, action_threshold: f64) -> ActionMatrix {
    ActionMatrix::from_legal(state, |_, _| rng.random::<f64>() * action_threshold)
}

/// Expected link error of every legal pair.
pub fn greedy_matrix(state: &EnvState, preinfo: &PreInfo, t_mem_steps: f64) -> ActionMatrix {
    ActionMatrix::from_legal(state, |i, j| expected_link_error(preinfo.f(i, j), preinfo.r(i, j), t_mem_steps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEdge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

fn by_weight(a: &PlanEdge, b: &PlanEdge) -> std::cmp::Ordering {
    a.weight.total_cmp(&b.weight).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j))
}

/// Kruskal on the complete graph weighted by expected link error. Returns the
/// tree edges in ascending `(weight, i, j)` order.
pub fn mst_plan(preinfo: &PreInfo, t_mem_steps: f64) -> Vec<PlanEdge> {
    let n = preinfo.n_qubits();
    let mut edges: Vec<PlanEdge> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| PlanEdge { i, j, weight: expected_link_error(preinfo.f(i, j), preinfo.r(i, j), t_mem_steps) })
        .collect();
    edges.sort_by(by_weight);
    let mut dsu = DisjointSet::new(n);
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for e in edges {
        if dsu.union(e.i, e.j) {
            tree.push(e);
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

/// Plan edges not yet built keep their weight; everything else is masked.
pub fn mst_matrix(plan: &[PlanEdge], state: &EnvState) -> ActionMatrix {
    let mut m = ActionMatrix::masked(state.n_qubits());
    for e in plan {
        if state.is_legal_pair(e.i, e.j) {
            m.cost.set_sym(e.i, e.j, e.weight);
        }
    }
    m
}

/// Sequential greedy selection: cheapest assignable pair first, ties by
/// `(i, j)`, until the threshold, the idle qubits or the workers run out.
/// Unused worker capacity is returned as `Idle`.
pub fn select_actions(matrix: &ActionMatrix, state: &EnvState, config: &StrategyConfig) -> Vec<Action> {
    select_below(matrix, state, config.action_threshold)
}

/// [`select_actions`] with an explicit threshold.
pub fn select_below(matrix: &ActionMatrix, state: &EnvState, threshold: f64) -> Vec<Action> {
    let n = state.n_qubits();
    let capacity = state.free_workers();
    let mut candidates: Vec<PlanEdge> = Vec::new();
    for i in 0..n {
        if !state.is_idle(i) {
            continue;
        }
        for j in i + 1..n {
            let c = matrix.get(i, j);
            if c < threshold && c != MASKED && state.is_assignable(i, j) {
                candidates.push(PlanEdge { i, j, weight: c });
            }
        }
    }
    candidates.sort_by(by_weight);
    let mut used = vec![false; n];
    let mut actions = Vec::with_capacity(capacity);
    for e in candidates {
        if actions.len() == capacity {
            break;
        }
        if !used[e.i] && !used[e.j] {
            used[e.i] = true;
            used[e.j] = true;
            actions.push(Action::Pair(e.i, e.j));
        }
    }
    actions.resize(capacity, Action::Idle);
    actions
}

pub fn pairs(actions: &[Action]) -> impl Iterator<Item = (usize, usize)> + '_ {
    actions.iter().filter_map(|a| match *a {
        Action::Pair(i, j) => Some((i, j)),
        Action::Idle => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SimConfig;
    use std::sync::Arc;

    fn state(n: usize) -> EnvState {
        let pre = Arc::new(PreInfo::homogeneous(n, 0.98, 0.1).unwrap());
        EnvState::new(SimConfig { max_workers: Some(2), ..SimConfig::with_qubits(n) }, pre).unwrap()
    }

    #[test]
    fn sequential_selection_skips_used_qubits() {
        let s = state(4);
        let mut m = ActionMatrix::masked(4);
        m.cost.set_sym(0, 1, 0.001);
        m.cost.set_sym(1, 2, 0.002);
        m.cost.set_sym(2, 3, 0.003);
        let a = select_actions(&m, &s, &StrategyConfig::default());
        assert_eq!(a, vec![Action::Pair(0, 1), Action::Pair(2, 3)]);
    }

    #[test]
    fn above_threshold_idles() {
        let s = state(4);
        let m = ActionMatrix::from_legal(&s, |_, _| 0.02);
        assert_eq!(select_actions(&m, &s, &StrategyConfig::default()), vec![Action::Idle, Action::Idle]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(StrategyKind::parse(k.name()), Some(k));
        }
    }
}
