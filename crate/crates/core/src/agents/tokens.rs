//! Per-pair feature tokens.

use crate::env::EnvState;
use crate::metrics::expected_link_error;
use crate::preinfo::PreInfo;

/// Features per pair token.
pub const N_DIM: usize = 7;

/// Row-major `len × dim` token matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub len: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TokenSequence {
    pub fn zeros(len: usize, dim: usize) -> Self {
        Self { len, dim, data: vec![0.0; len * dim] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn cast<T: super::real::Real>(&self) -> Vec<T> {
        self.data.iter().map(|&x| T::of(x)).collect()
    }
}

/// Token `(i, j)` sits at row `i·N_q + j`:
/// `[F, exp(−1/(R·t_mem)), 1 − F·exp(−1/(R·t_mem)), established, both idle, i/N_q, j/N_q]`.
/// Diagonal tokens carry zeros in the first three dims.
pub fn encode_tokens(state: &EnvState, preinfo: &PreInfo, t_mem_steps: f64) -> TokenSequence {
    let n = state.n_qubits();
    let mut t = TokenSequence::zeros(n * n, N_DIM);
    let nf = n as f64;
    for i in 0..n {
        for j in 0..n {
            let row = t.row_mut(i * n + j);
            if i != j {
                let f = preinfo.f(i, j);
                let r = preinfo.r(i, j);
                let decay = if r > 0.0 { (-1.0 / (r * t_mem_steps)).exp() } else { 0.0 };
                row[0] = f;
                row[1] = decay;
                row[2] = expected_link_error(f, r, t_mem_steps);
                row[3] = if state.established.get(i, j) { 1.0 } else { 0.0 };
            }
            row[4] = if state.is_idle(i) && state.is_idle(j) { 1.0 } else { 0.0 };
            row[5] = i as f64 / nf;
            row[6] = j as f64 / nf;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SimConfig;
    use std::sync::Arc;

    #[test]
    fn position_dims() {
        let pre = Arc::new(PreInfo::homogeneous(40, 0.98, 0.1).unwrap());
        let s = EnvState::new(SimConfig::with_qubits(40), pre.clone()).unwrap();
        let t = encode_tokens(&s, &pre, 1000.0);
        assert_eq!((t.len, t.dim), (1600, 7));
        let row = t.row(3 * 40 + 7);
        assert!((row[5] - 0.075).abs() < 1e-15 && (row[6] - 0.175).abs() < 1e-15);
        assert_eq!(&t.row(5 * 41)[..3], &[0.0; 3]);
    }
}
