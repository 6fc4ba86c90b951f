//! Two-node Hilbert space: atom A ⊗ atom B ⊗ cavity A ⊗ cavity B.

use nalgebra::DMatrix;

use crate::{CMatrix, CVector, C64};

/// Atomic levels, in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    GroundDown = 0,
    GroundUp = 1,
    ExcitedDown = 2,
    ExcitedUp = 3,
}

pub const ATOM_LEVELS: usize = 4;

/// Tensor factor of the product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    AtomA,
    AtomB,
    CavityA,
    CavityB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    /// Fock states kept per cavity (`max photons + 1`).
    pub fock_dim: usize,
}

impl Default for HilbertSpace {
    fn default() -> Self {
        Self { fock_dim: 2 }
    }
}

impl HilbertSpace {
    pub fn dim(&self) -> usize {
        ATOM_LEVELS * ATOM_LEVELS * self.fock_dim * self.fock_dim
    }

    fn factor_dims(&self) -> [usize; 4] {
        [ATOM_LEVELS, ATOM_LEVELS, self.fock_dim, self.fock_dim]
    }

    pub fn index(&self, atom_a: Level, atom_b: Level, photons_a: usize, photons_b: usize) -> usize {
        ((atom_a as usize * ATOM_LEVELS + atom_b as usize) * self.fock_dim + photons_a) * self.fock_dim
            + photons_b
    }

    /// Decompose a flat index into `(atom A level, atom B level, n_a, n_b)` indices.
    pub fn split(&self, idx: usize) -> (usize, usize, usize, usize) {
        let nb = idx % self.fock_dim;
        let rest = idx / self.fock_dim;
        let na = rest % self.fock_dim;
        let rest = rest / self.fock_dim;
        (rest / ATOM_LEVELS, rest % ATOM_LEVELS, na, nb)
    }

    pub fn basis(&self, atom_a: Level, atom_b: Level, photons_a: usize, photons_b: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.index(atom_a, atom_b, photons_a, photons_b)] = C64::new(1.0, 0.0);
        v
    }

    /// Embed a single-factor operator into the full space.
    pub fn embed(&self, op: &CMatrix, factor: Factor) -> CMatrix {
        let dims = self.factor_dims();
        let slot = factor as usize;
        assert_eq!(op.nrows(), dims[slot], "operator does not match factor dimension");
        let mut out = CMatrix::identity(1, 1);
        for (k, &d) in dims.iter().enumerate() {
            let piece = if k == slot { op.clone() } else { CMatrix::identity(d, d) };
            out = out.kronecker(&piece);
        }
        out
    }

    /// Product state of the two atoms with both cavities in vacuum.
    pub fn product_state(&self, atom_a: &[C64], atom_b: &[C64]) -> CVector {
        let mut v = CVector::zeros(self.dim());
        for (ia, &ca) in atom_a.iter().enumerate() {
            for (ib, &cb) in atom_b.iter().enumerate() {
                let idx = (ia * ATOM_LEVELS + ib) * self.fock_dim * self.fock_dim;
                v[idx] = ca * cb;
            }
        }
        v
    }
}

/// `|to⟩⟨from|` on one atom.
pub fn atom_transition(to: Level, from: Level) -> CMatrix {
    let mut m = CMatrix::zeros(ATOM_LEVELS, ATOM_LEVELS);
    m[(to as usize, from as usize)] = C64::new(1.0, 0.0);
    m
}

pub fn annihilation(fock_dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Operators acting on one node (its atom and its cavity).
#[derive(Debug, Clone)]
pub struct NodeOperators {
    /// `|u↓⟩⟨u↓| − |g↓⟩⟨g↓|`
    pub sz_down: CMatrix,
    /// `|u↑⟩⟨u↑| − |g↑⟩⟨g↑|`
    pub sz_up: CMatrix,
    /// `|u↓⟩⟨g↓|`
    pub sp_down: CMatrix,
    pub sm_down: CMatrix,
    /// `|u↑⟩⟨g↑|`
    pub sp_up: CMatrix,
    pub sm_up: CMatrix,
    /// Spin-flipping decay `|g↑⟩⟨u↓|`.
    pub sm_down_up: CMatrix,
    /// Spin-flipping decay `|g↓⟩⟨u↑|`.
    pub sm_up_down: CMatrix,
    /// Microwave raising `|g↑⟩⟨g↓|`.
    pub mw_plus: CMatrix,
    pub mw_minus: CMatrix,
    /// Cavity annihilation operator (`â` for node A, `b̂` for node B).
    pub cavity: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Operators {
    pub space: HilbertSpace,
    pub node_a: NodeOperators,
    pub node_b: NodeOperators,
    /// Detector A mode `(â + b̂)/√2`.
    pub det_a: CMatrix,
    /// Detector B mode `(â − b̂)/√2`.
    pub det_b: CMatrix,
}

fn node_ops(space: &HilbertSpace, atom: Factor, cavity: Factor) -> NodeOperators {
    use Level::*;
    let e = |m: CMatrix| space.embed(&m, atom);
    let proj = |l: Level| atom_transition(l, l);
    NodeOperators {
        sz_down: e(proj(ExcitedDown) - proj(GroundDown)),
        sz_up: e(proj(ExcitedUp) - proj(GroundUp)),
        sp_down: e(atom_transition(ExcitedDown, GroundDown)),
        sm_down: e(atom_transition(GroundDown, ExcitedDown)),
        sp_up: e(atom_transition(ExcitedUp, GroundUp)),
        sm_up: e(atom_transition(GroundUp, ExcitedUp)),
        sm_down_up: e(atom_transition(GroundUp, ExcitedDown)),
        sm_up_down: e(atom_transition(GroundDown, ExcitedUp)),
        mw_plus: e(atom_transition(GroundUp, GroundDown)),
        mw_minus: e(atom_transition(GroundDown, GroundUp)),
        cavity: space.embed(&annihilation(space.fock_dim), cavity),
    }
}

/// Build every operator of the two-node model in the full product space.
pub fn build_operators(space: HilbertSpace) -> Operators {
    let node_a = node_ops(&space, Factor::AtomA, Factor::CavityA);
    let node_b = node_ops(&space, Factor::AtomB, Factor::CavityB);
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let det_a = (&node_a.cavity + &node_b.cavity) * s;
    let det_b = (&node_a.cavity - &node_b.cavity) * s;
    Operators { space, node_a, node_b, det_a, det_b }
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest absolute entry; handy for operator-identity assertions.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real identity promoted to complex.
pub fn identity(dim: usize) -> CMatrix {
    DMatrix::identity(dim, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_64() {
        let space = HilbertSpace::default();
        assert_eq!(space.dim(), 64);
        let ops = build_operators(space);
        assert_eq!(ops.node_a.sp_down.nrows(), 64);
    }

    #[test]
    fn index_and_split_agree() {
        let space = HilbertSpace::default();
        for idx in 0..space.dim() {
            let (a, b, na, nb) = space.split(idx);
            let la = [Level::GroundDown, Level::GroundUp, Level::ExcitedDown, Level::ExcitedUp];
            assert_eq!(space.index(la[a], la[b], na, nb), idx);
        }
    }

    #[test]
    fn excitation_projector_is_idempotent() {
        let ops = build_operators(HilbertSpace::default());
        let p = &ops.node_a.sp_down * &ops.node_a.sm_down;
        assert!(max_abs(&(&p * &p - &p)) < 1e-15);
        // and it projects onto |u↓⟩ of atom A
        let v = ops.space.basis(Level::ExcitedDown, Level::GroundUp, 0, 1);
        assert!(((&p * &v) - &v).norm() < 1e-15);
        let w = ops.space.basis(Level::GroundDown, Level::GroundUp, 0, 1);
        assert!((&p * &w).norm() < 1e-15);
    }

    #[test]
    fn truncated_ladder_commutator() {
        // [a, a†] on a two-state Fock space is diag(1, -1): identity on the
        // vacuum, and the truncation shows up on the top state.
        let a = annihilation(2);
        let c = commutator(&a, &a.adjoint());
        assert_eq!(c[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(c[(1, 1)], C64::new(-1.0, 0.0));
        assert_eq!(c[(0, 1)], C64::new(0.0, 0.0));
        // below the cutoff the canonical relation holds exactly
        let a4 = annihilation(4);
        let c4 = commutator(&a4, &a4.adjoint());
        for n in 0..3 {
            assert!((c4[(n, n)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn operators_on_different_atoms_commute() {
        let ops = build_operators(HilbertSpace::default());
        let a_ops = [&ops.node_a.sp_down, &ops.node_a.sm_up, &ops.node_a.sz_down, &ops.node_a.mw_plus];
        let b_ops = [&ops.node_b.sm_down, &ops.node_b.sp_up, &ops.node_b.sz_up, &ops.node_b.mw_minus];
        for x in a_ops {
            for y in b_ops {
                assert!(max_abs(&commutator(x, y)) < 1e-15);
            }
        }
    }

    #[test]
    fn beamsplitter_preserves_photon_number() {
        let ops = build_operators(HilbertSpace::default());
        let lhs = ops.det_a.adjoint() * &ops.det_a + ops.det_b.adjoint() * &ops.det_b;
        let rhs = ops.node_a.cavity.adjoint() * &ops.node_a.cavity
            + ops.node_b.cavity.adjoint() * &ops.node_b.cavity;
        assert!(max_abs(&(lhs - rhs)) < 1e-14);
    }
}
