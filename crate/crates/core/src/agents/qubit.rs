//! Qubit-level tokens for the two-pass variant.
//!
//! Per qubit `q`: `[link cost, mean partner cost, idle, component size / N_q,
//! q / N_q, marker]`. Without an anchor the link cost is the cheapest
//! assignable partner; with anchor `i` it is the cost of `(i, q)` and the
//! marker flags `i`. Unavailable costs read as 1.

use super::tokens::TokenSequence;
use crate::env::EnvState;
use crate::metrics::expected_link_error;
use crate::preinfo::PreInfo;

pub const QUBIT_DIM: usize = 6;

pub fn encode_qubit_tokens(state: &EnvState, preinfo: &PreInfo, t_mem_steps: f64, anchor: Option<usize>) -> TokenSequence {
    let n = state.n_qubits();
    let nf = n as f64;
    let mut t = TokenSequence::zeros(n, QUBIT_DIM);
    for q in 0..n {
        let mut min = 1.0f64;
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..n {
            if j != q && state.is_legal_pair(q, j) {
                let c = expected_link_error(preinfo.f(q, j), preinfo.r(q, j), t_mem_steps);
                sum += c;
                count += 1;
                if state.is_assignable(q, j) {
                    min = min.min(c);
                }
            }
        }
        let link = match anchor {
            None => min,
            Some(i) if i != q && state.is_assignable(i, q) => {
                expected_link_error(preinfo.f(i, q), preinfo.r(i, q), t_mem_steps)
            }
            Some(_) => 1.0,
        };
        let row = t.row_mut(q);
        row[0] = link.clamp(0.0, 1.0);
        row[1] = if count > 0 { (sum / count as f64).clamp(0.0, 1.0) } else { 1.0 };
        row[2] = if state.is_idle(q) { 1.0 } else { 0.0 };
        row[3] = state.dsu.component_size(q) as f64 / nf;
        row[4] = q as f64 / nf;
        row[5] = if anchor == Some(q) { 1.0 } else { 0.0 };
    }
    t
}
