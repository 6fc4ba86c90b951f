//! Named, shaped slices of one flat parameter vector.

use std::ops::Range;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layout {
    pub tensors: Vec<Tensor>,
    pub total: usize,
}

impl Layout {
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> Range<usize> {
        let size: usize = shape.iter().product();
        let range = self.total..self.total + size;
        self.tensors.push(Tensor { name: name.into(), shape: shape.to_vec(), range: range.clone() });
        self.total += size;
        range
    }

    /// Glorot-uniform matrices, unit layer-norm gains, zero biases. A tensor
    /// is a gain when its name ends in `.g`.
    pub fn init<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        for t in &self.tensors {
            if t.shape.len() == 2 {
                let a = (6.0 / (t.shape[0] + t.shape[1]) as f64).sqrt();
                for v in &mut p[t.range.clone()] {
                    *v = rng.random_range(-a..a);
                }
            } else if t.name.ends_with(".g") {
                p[t.range.clone()].fill(1.0);
            }
        }
        p
    }
}
