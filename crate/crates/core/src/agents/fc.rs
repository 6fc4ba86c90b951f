//! Fully connected baseline over the flattened token matrix. Its input size
//! fixes `N_q`, so it cannot be reused at other sizes.

use std::ops::Range;

use rand::Rng;

use super::layout::Layout;
use super::real::{add_bias, matmul, matmul_nt, matmul_tn_acc, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FcDims {
    pub n_qubits: usize,
    pub token_dim: usize,
    pub hidden: usize,
}

impl FcDims {
    pub fn inputs(&self) -> usize {
        self.n_qubits * self.n_qubits * self.token_dim
    }

    pub fn outputs(&self) -> usize {
        self.n_qubits * self.n_qubits
    }
}

struct Ranges {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
}

fn build_layout(d: &FcDims) -> (Layout, Ranges) {
    let mut l = Layout::default();
    let r = Ranges {
        w1: l.push("fc1.w", &[d.inputs(), d.hidden]),
        b1: l.push("fc1.b", &[d.hidden]),
        w2: l.push("fc2.w", &[d.hidden, d.hidden]),
        b2: l.push("fc2.b", &[d.hidden]),
        w3: l.push("out.w", &[d.hidden, d.outputs()]),
        b3: l.push("out.b", &[d.outputs()]),
    };
    (l, r)
}

pub struct Fc<T: Real> {
    pub dims: FcDims,
    pub layout: Layout,
    ranges: Ranges,
    pub params: Vec<T>,
}

impl<T: Real> Clone for Fc<T> {
    fn clone(&self) -> Self {
        Self::from_params(self.dims, self.params.clone()).expect("valid layout")
    }
}

impl<T: Real> std::fmt::Debug for Fc<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fc").field("dims", &self.dims).field("params", &self.params.len()).finish()
    }
}

pub struct FcCache<T> {
    x: Vec<T>,
    h1: Vec<T>,
    h2: Vec<T>,
}

impl<T: Real> Fc<T> {
    pub fn new<R: Rng>(dims: FcDims, rng: &mut R) -> Result<Self> {
        let (layout, _) = build_layout(&dims);
        Self::from_params(dims, layout.init(rng).into_iter().map(T::of).collect())
    }

    pub fn from_params(dims: FcDims, params: Vec<T>) -> Result<Self> {
        if dims.n_qubits < 2 || dims.hidden == 0 || dims.token_dim == 0 {
            return Err(Error::Config(format!("invalid fully connected dimensions {dims:?}")));
        }
        let (layout, ranges) = build_layout(&dims);
        if params.len() != layout.total {
            return Err(Error::Shape(format!("expected {} parameters, got {}", layout.total, params.len())));
        }
        Ok(Self { dims, layout, ranges, params })
    }

    pub fn layout_of(dims: &FcDims) -> Layout {
        build_layout(dims).0
    }

    pub fn cast<U: Real>(&self) -> Fc<U> {
        Fc::from_params(self.dims, self.params.iter().map(|&x| U::of(x.f64())).collect()).expect("same layout")
    }

    fn p(&self, r: &Range<usize>) -> &[T] {
        &self.params[r.clone()]
    }

    fn check(&self, tokens: &[T]) -> Result<()> {
        if tokens.len() != self.dims.inputs() {
            return Err(Error::Shape(format!(
                "fully connected model expects {} inputs ({} qubits), got {}",
                self.dims.inputs(),
                self.dims.n_qubits,
                tokens.len()
            )));
        }
        Ok(())
    }

    fn dense(&self, x: &[T], w: &Range<usize>, b: &Range<usize>, n_in: usize, n_out: usize, relu: bool) -> Vec<T> {
        let mut y = vec![T::zero(); n_out];
        matmul(x, self.p(w), &mut y, 1, n_in, n_out);
        add_bias(&mut y, self.p(b));
        if relu {
            for v in &mut y {
                *v = v.max(T::zero());
            }
        }
        y
    }

    pub fn forward_cached(&self, tokens: &[T]) -> Result<(Vec<T>, FcCache<T>)> {
        self.check(tokens)?;
        let d = self.dims;
        let r = &self.ranges;
        let h1 = self.dense(tokens, &r.w1, &r.b1, d.inputs(), d.hidden, true);
        let h2 = self.dense(&h1, &r.w2, &r.b2, d.hidden, d.hidden, true);
        let y = self.dense(&h2, &r.w3, &r.b3, d.hidden, d.outputs(), false);
        Ok((y, FcCache { x: tokens.to_vec(), h1, h2 }))
    }

    pub fn forward(&self, tokens: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_cached(tokens)?.0)
    }

    pub fn backward(&self, cache: &FcCache<T>, dy: &[T], grad: &mut [T]) {
        let d = self.dims;
        let r = &self.ranges;
        matmul_tn_acc(&cache.h2, dy, &mut grad[r.w3.clone()], 1, d.hidden, d.outputs());
        acc(&mut grad[r.b3.clone()], dy);
        let mut dh2 = vec![T::zero(); d.hidden];
        matmul_nt(dy, self.p(&r.w3), &mut dh2, 1, d.outputs(), d.hidden);
        relu_mask(&mut dh2, &cache.h2);
        matmul_tn_acc(&cache.h1, &dh2, &mut grad[r.w2.clone()], 1, d.hidden, d.hidden);
        acc(&mut grad[r.b2.clone()], &dh2);
        let mut dh1 = vec![T::zero(); d.hidden];
        matmul_nt(&dh2, self.p(&r.w2), &mut dh1, 1, d.hidden, d.hidden);
        relu_mask(&mut dh1, &cache.h1);
        matmul_tn_acc(&cache.x, &dh1, &mut grad[r.w1.clone()], 1, d.inputs(), d.hidden);
        acc(&mut grad[r.b1.clone()], &dh1);
    }
}

fn acc<T: Real>(dst: &mut [T], src: &[T]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a = *a + *b;
    }
}

fn relu_mask<T: Real>(d: &mut [T], activated: &[T]) {
    for (g, &h) in d.iter_mut().zip(activated) {
        if h <= T::zero() {
            *g = T::zero();
        }
    }
}
