//! Bidirectional pre-norm transformer encoder with a scalar head per token.
//!
//! Block: `x += Attn(LN₁(x))`, `x += W₂·relu(W₁·LN₂(x))`; the head reads
//! `LN_f(x)`. Backpropagation is written out by hand.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layout::Layout;
use super::real::{add_bias, col_sum_acc, matmul, matmul_nt, matmul_tn_acc, Real};
use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-5;
/// Query rows processed together during inference attention.
const ROW_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub input_dim: usize,
    pub blocks: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
}

impl EncoderDims {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.embed_dim == 0 || self.ff_dim == 0 || self.heads == 0 {
            return Err(Error::Config(format!("encoder dimensions must be positive: {self:?}")));
        }
        if self.embed_dim % self.heads != 0 {
            return Err(Error::Config(format!(
                "embed_dim {} not divisible by heads {}",
                self.embed_dim, self.heads
            )));
        }
        Ok(())
    }

    fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BlockRanges {
    ln1_g: Range<usize>,
    ln1_b: Range<usize>,
    wq: Range<usize>,
    bq: Range<usize>,
    wk: Range<usize>,
    bk: Range<usize>,
    wv: Range<usize>,
    bv: Range<usize>,
    wo: Range<usize>,
    bo: Range<usize>,
    ln2_g: Range<usize>,
    ln2_b: Range<usize>,
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ranges {
    embed_w: Range<usize>,
    embed_b: Range<usize>,
    blocks: Vec<BlockRanges>,
    lnf_g: Range<usize>,
    lnf_b: Range<usize>,
    head_w: Range<usize>,
    head_b: Range<usize>,
}

fn build_layout(d: &EncoderDims) -> (Layout, Ranges) {
    let mut l = Layout::default();
    let e = d.embed_dim;
    let embed_w = l.push("embed.w", &[d.input_dim, e]);
    let embed_b = l.push("embed.b", &[e]);
    let blocks = (0..d.blocks)
        .map(|b| {
            let n = |s: &str| format!("block{b}.{s}");
            BlockRanges {
                ln1_g: l.push(n("ln1.g"), &[e]),
                ln1_b: l.push(n("ln1.b"), &[e]),
                wq: l.push(n("attn.wq"), &[e, e]),
                bq: l.push(n("attn.bq"), &[e]),
                wk: l.push(n("attn.wk"), &[e, e]),
                bk: l.push(n("attn.bk"), &[e]),
                wv: l.push(n("attn.wv"), &[e, e]),
                bv: l.push(n("attn.bv"), &[e]),
                wo: l.push(n("attn.wo"), &[e, e]),
                bo: l.push(n("attn.bo"), &[e]),
                ln2_g: l.push(n("ln2.g"), &[e]),
                ln2_b: l.push(n("ln2.b"), &[e]),
                w1: l.push(n("ff.w1"), &[e, d.ff_dim]),
                b1: l.push(n("ff.b1"), &[d.ff_dim]),
                w2: l.push(n("ff.w2"), &[d.ff_dim, e]),
                b2: l.push(n("ff.b2"), &[e]),
            }
        })
        .collect();
    let lnf_g = l.push("final.ln.g", &[e]);
    let lnf_b = l.push("final.ln.b", &[e]);
    let head_w = l.push("head.w", &[e, 1]);
    let head_b = l.push("head.b", &[1]);
    (l, Ranges { embed_w, embed_b, blocks, lnf_g, lnf_b, head_w, head_b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<T: Real> {
    pub dims: EncoderDims,
    pub layout: Layout,
    ranges: Ranges,
    pub params: Vec<T>,
}

struct LnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

struct BlockCache<T> {
    ln1: LnCache<T>,
    h: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    /// `heads × len × len` attention weights.
    p: Vec<T>,
    a: Vec<T>,
    ln2: LnCache<T>,
    h2: Vec<T>,
    f_pre: Vec<T>,
    f: Vec<T>,
}

/// Activations kept for the backward pass.
pub struct Cache<T> {
    len: usize,
    tokens: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    lnf: LnCache<T>,
    hf: Vec<T>,
}

fn layer_norm<T: Real>(x: &[T], g: &[T], b: &[T], out: &mut [T], cache: Option<&mut LnCache<T>>) {
    let e = g.len();
    let eps = T::of(LN_EPS);
    let inv_e = T::of(1.0 / e as f64);
    let mut xhat_all = cache;
    for (r, (row, orow)) in x.chunks_exact(e).zip(out.chunks_exact_mut(e)).enumerate() {
        let mean = row.iter().copied().sum::<T>() * inv_e;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_e;
        let inv_std = T::one() / (var + eps).sqrt();
        for c in 0..e {
            let xh = (row[c] - mean) * inv_std;
            orow[c] = g[c] * xh + b[c];
            if let Some(cache) = xhat_all.as_deref_mut() {
                cache.xhat[r * e + c] = xh;
            }
        }
        if let Some(cache) = xhat_all.as_deref_mut() {
            cache.inv_std[r] = inv_std;
        }
    }
}

/// Returns `dx`; accumulates the gain and bias gradients.
fn layer_norm_backward<T: Real>(cache: &LnCache<T>, dy: &[T], g: &[T], dg: &mut [T], db: &mut [T]) -> Vec<T> {
    let e = g.len();
    let inv_e = T::of(1.0 / e as f64);
    let mut dx = vec![T::zero(); dy.len()];
    let mut dxhat = vec![T::zero(); e];
    for r in 0..dy.len() / e {
        let dyr = &dy[r * e..(r + 1) * e];
        let xh = &cache.xhat[r * e..(r + 1) * e];
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for c in 0..e {
            dxhat[c] = dyr[c] * g[c];
            dg[c] = dg[c] + dyr[c] * xh[c];
            db[c] = db[c] + dyr[c];
            m1 = m1 + dxhat[c];
            m2 = m2 + dxhat[c] * xh[c];
        }
        m1 = m1 * inv_e;
        m2 = m2 * inv_e;
        let s = cache.inv_std[r];
        for c in 0..e {
            dx[r * e + c] = s * (dxhat[c] - m1 - xh[c] * m2);
        }
    }
    dx
}

fn softmax_rows<T: Real>(s: &mut [T], width: usize) {
    for row in s.chunks_exact_mut(width) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        let inv = T::one() / sum;
        for v in row.iter_mut() {
            *v = *v * inv;
        }
    }
}

fn ln_cache<T: Real>(len: usize, e: usize) -> LnCache<T> {
    LnCache { xhat: vec![T::zero(); len * e], inv_std: vec![T::zero(); len] }
}

impl<T: Real> Encoder<T> {
    pub fn new<R: Rng>(dims: EncoderDims, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let (layout, ranges) = build_layout(&dims);
        let params = layout.init(rng).into_iter().map(T::of).collect();
        Ok(Self { dims, layout, ranges, params })
    }

    /// Rebuild from a flat parameter vector in layout order.
    pub fn from_params(dims: EncoderDims, params: Vec<T>) -> Result<Self> {
        dims.validate()?;
        let (layout, ranges) = build_layout(&dims);
        if params.len() != layout.total {
            return Err(Error::Shape(format!("expected {} parameters, got {}", layout.total, params.len())));
        }
        Ok(Self { dims, layout, ranges, params })
    }

    pub fn layout_of(dims: &EncoderDims) -> Layout {
        build_layout(dims).0
    }

    pub fn cast<U: Real>(&self) -> Encoder<U> {
        Encoder {
            dims: self.dims,
            layout: self.layout.clone(),
            ranges: self.ranges.clone(),
            params: self.params.iter().map(|&x| U::of(x.f64())).collect(),
        }
    }

    fn p(&self, r: &Range<usize>) -> &[T] {
        &self.params[r.clone()]
    }

    fn check_width(&self, tokens: &[T], len: usize) -> Result<()> {
        if tokens.len() != len * self.dims.input_dim {
            return Err(Error::Shape(format!(
                "token buffer of {} values is not {len} tokens of width {}",
                tokens.len(),
                self.dims.input_dim
            )));
        }
        Ok(())
    }

    fn embed(&self, tokens: &[T], len: usize) -> Vec<T> {
        let e = self.dims.embed_dim;
        let mut x = vec![T::zero(); len * e];
        matmul(tokens, self.p(&self.ranges.embed_w), &mut x, len, self.dims.input_dim, e);
        add_bias(&mut x, self.p(&self.ranges.embed_b));
        x
    }

    fn linear(&self, x: &[T], len: usize, w: &Range<usize>, b: &Range<usize>, n_in: usize, n_out: usize) -> Vec<T> {
        let mut y = vec![T::zero(); len * n_out];
        matmul(x, self.p(w), &mut y, len, n_in, n_out);
        add_bias(&mut y, self.p(b));
        y
    }

    fn head(&self, hf: &[T], len: usize) -> Vec<T> {
        self.linear(hf, len, &self.ranges.head_w, &self.ranges.head_b, self.dims.embed_dim, 1)
    }

    /// One prediction per token. Attention scores are built in row chunks so
    /// memory stays linear in the sequence length.
    pub fn forward(&self, tokens: &[T], len: usize) -> Result<Vec<T>> {
        self.check_width(tokens, len)?;
        let e = self.dims.embed_dim;
        let dh = self.dims.head_dim();
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut x = self.embed(tokens, len);
        let mut h = vec![T::zero(); len * e];
        let mut s = vec![T::zero(); ROW_CHUNK.min(len) * len];
        for br in &self.ranges.blocks {
            layer_norm(&x, self.p(&br.ln1_g), self.p(&br.ln1_b), &mut h, None);
            let q = self.linear(&h, len, &br.wq, &br.bq, e, e);
            let k = self.linear(&h, len, &br.wk, &br.bk, e, e);
            let v = self.linear(&h, len, &br.wv, &br.bv, e, e);
            let mut a = vec![T::zero(); len * e];
            for hd in 0..self.dims.heads {
                let off = hd * dh;
                let mut r0 = 0;
                while r0 < len {
                    let rows = ROW_CHUNK.min(len - r0);
                    let sc = &mut s[..rows * len];
                    T::gemm(rows, dh, len, scale, &q[r0 * e + off..], (e, 1), &k[off..], (1, e), T::zero(), sc, (len, 1));
                    softmax_rows(sc, len);
                    T::gemm(rows, len, dh, T::one(), sc, (len, 1), &v[off..], (e, 1), T::zero(), &mut a[r0 * e + off..], (e, 1));
                    r0 += rows;
                }
            }
            let o = self.linear(&a, len, &br.wo, &br.bo, e, e);
            for (xv, ov) in x.iter_mut().zip(&o) {
                *xv = *xv + *ov;
            }
            layer_norm(&x, self.p(&br.ln2_g), self.p(&br.ln2_b), &mut h, None);
            let mut f = self.linear(&h, len, &br.w1, &br.b1, e, self.dims.ff_dim);
            for v in &mut f {
                *v = v.max(T::zero());
            }
            let g = self.linear(&f, len, &br.w2, &br.b2, self.dims.ff_dim, e);
            for (xv, gv) in x.iter_mut().zip(&g) {
                *xv = *xv + *gv;
            }
        }
        layer_norm(&x, self.p(&self.ranges.lnf_g), self.p(&self.ranges.lnf_b), &mut h, None);
        Ok(self.head(&h, len))
    }

    /// Forward pass keeping every activation needed by [`Self::backward`].
    pub fn forward_cached(&self, tokens: &[T], len: usize) -> Result<(Vec<T>, Cache<T>)> {
        self.check_width(tokens, len)?;
        let e = self.dims.embed_dim;
        let dh = self.dims.head_dim();
        let heads = self.dims.heads;
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let mut x = self.embed(tokens, len);
        let mut blocks = Vec::with_capacity(self.dims.blocks);
        for br in &self.ranges.blocks {
            let mut ln1 = ln_cache(len, e);
            let mut h = vec![T::zero(); len * e];
            layer_norm(&x, self.p(&br.ln1_g), self.p(&br.ln1_b), &mut h, Some(&mut ln1));
            let q = self.linear(&h, len, &br.wq, &br.bq, e, e);
            let k = self.linear(&h, len, &br.wk, &br.bk, e, e);
            let v = self.linear(&h, len, &br.wv, &br.bv, e, e);
            let mut p = vec![T::zero(); heads * len * len];
            let mut a = vec![T::zero(); len * e];
            for hd in 0..heads {
                let off = hd * dh;
                let ph = &mut p[hd * len * len..(hd + 1) * len * len];
                T::gemm(len, dh, len, scale, &q[off..], (e, 1), &k[off..], (1, e), T::zero(), ph, (len, 1));
                softmax_rows(ph, len);
                T::gemm(len, len, dh, T::one(), ph, (len, 1), &v[off..], (e, 1), T::zero(), &mut a[off..], (e, 1));
            }
            let o = self.linear(&a, len, &br.wo, &br.bo, e, e);
            for (xv, ov) in x.iter_mut().zip(&o) {
                *xv = *xv + *ov;
            }
            let mut ln2 = ln_cache(len, e);
            let mut h2 = vec![T::zero(); len * e];
            layer_norm(&x, self.p(&br.ln2_g), self.p(&br.ln2_b), &mut h2, Some(&mut ln2));
            let f_pre = self.linear(&h2, len, &br.w1, &br.b1, e, self.dims.ff_dim);
            let f: Vec<T> = f_pre.iter().map(|v| v.max(T::zero())).collect();
            let g = self.linear(&f, len, &br.w2, &br.b2, self.dims.ff_dim, e);
            for (xv, gv) in x.iter_mut().zip(&g) {
                *xv = *xv + *gv;
            }
            blocks.push(BlockCache { ln1, h, q, k, v, p, a, ln2, h2, f_pre, f });
        }
        let mut lnf = ln_cache(len, e);
        let mut hf = vec![T::zero(); len * e];
        layer_norm(&x, self.p(&self.ranges.lnf_g), self.p(&self.ranges.lnf_b), &mut hf, Some(&mut lnf));
        let y = self.head(&hf, len);
        Ok((y, Cache { len, tokens: tokens.to_vec(), blocks, lnf, hf }))
    }

    /// Accumulate `∂L/∂θ` into `grad` given `dy = ∂L/∂y`.
    pub fn backward(&self, cache: &Cache<T>, dy: &[T], grad: &mut [T]) {
        assert_eq!(grad.len(), self.params.len());
        assert_eq!(dy.len(), cache.len);
        let len = cache.len;
        let e = self.dims.embed_dim;
        let ff = self.dims.ff_dim;
        let dh = self.dims.head_dim();
        let scale = T::of(1.0 / (dh as f64).sqrt());
        let r = &self.ranges;

        matmul_tn_acc(&cache.hf, dy, &mut grad[r.head_w.clone()], len, e, 1);
        grad[r.head_b.start] = grad[r.head_b.start] + dy.iter().copied().sum::<T>();
        let hw = self.p(&r.head_w);
        let dhf: Vec<T> = (0..len * e).map(|idx| dy[idx / e] * hw[idx % e]).collect();
        let mut dx = {
            let (dg, db) = split_pair(grad, &r.lnf_g, &r.lnf_b);
            layer_norm_backward(&cache.lnf, &dhf, self.p(&r.lnf_g), dg, db)
        };

        for (br, bc) in r.blocks.iter().zip(&cache.blocks).rev() {
            // feed-forward branch
            matmul_tn_acc(&bc.f, &dx, &mut grad[br.w2.clone()], len, ff, e);
            col_sum_acc(&dx, &mut grad[br.b2.clone()]);
            let mut df = vec![T::zero(); len * ff];
            matmul_nt(&dx, self.p(&br.w2), &mut df, len, e, ff);
            for (d, &pre) in df.iter_mut().zip(&bc.f_pre) {
                if pre <= T::zero() {
                    *d = T::zero();
                }
            }
            matmul_tn_acc(&bc.h2, &df, &mut grad[br.w1.clone()], len, e, ff);
            col_sum_acc(&df, &mut grad[br.b1.clone()]);
            let mut dh2 = vec![T::zero(); len * e];
            matmul_nt(&df, self.p(&br.w1), &mut dh2, len, ff, e);
            let dln2 = {
                let (dg, db) = split_pair(grad, &br.ln2_g, &br.ln2_b);
                layer_norm_backward(&bc.ln2, &dh2, self.p(&br.ln2_g), dg, db)
            };
            for (a, b) in dx.iter_mut().zip(&dln2) {
                *a = *a + *b;
            }

            // attention branch
            matmul_tn_acc(&bc.a, &dx, &mut grad[br.wo.clone()], len, e, e);
            col_sum_acc(&dx, &mut grad[br.bo.clone()]);
            let mut da = vec![T::zero(); len * e];
            matmul_nt(&dx, self.p(&br.wo), &mut da, len, e, e);
            let mut dq = vec![T::zero(); len * e];
            let mut dk = vec![T::zero(); len * e];
            let mut dv = vec![T::zero(); len * e];
            let mut ds = vec![T::zero(); len * len];
            for hd in 0..self.dims.heads {
                let off = hd * dh;
                let ph = &bc.p[hd * len * len..(hd + 1) * len * len];
                T::gemm(len, dh, len, T::one(), &da[off..], (e, 1), &bc.v[off..], (1, e), T::zero(), &mut ds, (len, 1));
                T::gemm(len, len, dh, T::one(), ph, (1, len), &da[off..], (e, 1), T::zero(), &mut dv[off..], (e, 1));
                for (drow, prow) in ds.chunks_exact_mut(len).zip(ph.chunks_exact(len)) {
                    let dot = drow.iter().zip(prow).map(|(&d, &p)| d * p).sum::<T>();
                    for (d, &p) in drow.iter_mut().zip(prow) {
                        *d = p * (*d - dot);
                    }
                }
                T::gemm(len, len, dh, scale, &ds, (len, 1), &bc.k[off..], (e, 1), T::zero(), &mut dq[off..], (e, 1));
                T::gemm(len, len, dh, scale, &ds, (1, len), &bc.q[off..], (e, 1), T::zero(), &mut dk[off..], (e, 1));
            }
            let mut dh = vec![T::zero(); len * e];
            for (dproj, w, b) in [(&dq, &br.wq, &br.bq), (&dk, &br.wk, &br.bk), (&dv, &br.wv, &br.bv)] {
                matmul_tn_acc(&bc.h, dproj, &mut grad[w.clone()], len, e, e);
                col_sum_acc(dproj, &mut grad[b.clone()]);
                T::gemm(len, e, e, T::one(), dproj, (e, 1), self.p(w), (1, e), T::one(), &mut dh, (e, 1));
            }
            let dln1 = {
                let (dg, db) = split_pair(grad, &br.ln1_g, &br.ln1_b);
                layer_norm_backward(&bc.ln1, &dh, self.p(&br.ln1_g), dg, db)
            };
            for (a, b) in dx.iter_mut().zip(&dln1) {
                *a = *a + *b;
            }
        }

        matmul_tn_acc(&cache.tokens, &dx, &mut grad[r.embed_w.clone()], len, self.dims.input_dim, e);
        col_sum_acc(&dx, &mut grad[r.embed_b.clone()]);
    }
}

/// Two disjoint mutable sub-slices; `a` must precede `b`.
fn split_pair<'a, T>(v: &'a mut [T], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [T], &'a mut [T]) {
    assert!(a.end <= b.start);
    let (lo, hi) = v.split_at_mut(b.start);
    (&mut lo[a.clone()], &mut hi[..b.len()])
}
