//! Reduced states, Bell references and the Uhlmann fidelity.

use crate::error::{QmcsError, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect, sqrt_psd, trace};
use crate::space::{HilbertSpace, ATOM_LEVELS};
use crate::{CMatrix, CVector, C64};

/// Dimension of the two-atom space (photons traced out).
pub const ATOMS_DIM: usize = ATOM_LEVELS * ATOM_LEVELS;

/// Trace the cavity factors out of a pure state; returns a 16×16 density
/// matrix over (atom A, atom B).
pub fn partial_trace_photons_pure(space: &HilbertSpace, psi: &CVector) -> CMatrix {
    let photons = space.fock_dim * space.fock_dim;
    let mut out = CMatrix::zeros(ATOMS_DIM, ATOMS_DIM);
    for i in 0..ATOMS_DIM {
        for j in 0..ATOMS_DIM {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..photons {
                acc += psi[i * photons + p] * psi[j * photons + p].conj();
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Same as [`partial_trace_photons_pure`] for a density matrix.
pub fn partial_trace_photons(space: &HilbertSpace, rho: &CMatrix) -> CMatrix {
    let photons = space.fock_dim * space.fock_dim;
    CMatrix::from_fn(ATOMS_DIM, ATOMS_DIM, |i, j| {
        (0..photons).map(|p| rho[(i * photons + p, j * photons + p)]).sum()
    })
}

/// Accumulate `Tr_photons |ψ⟩⟨ψ|` into `acc` without allocating.
pub fn accumulate_reduced(space: &HilbertSpace, psi: &CVector, acc: &mut CMatrix) {
    let photons = space.fock_dim * space.fock_dim;
    for i in 0..ATOMS_DIM {
        for j in 0..ATOMS_DIM {
            let mut s = C64::new(0.0, 0.0);
            for p in 0..photons {
                s += psi[i * photons + p] * psi[j * photons + p].conj();
            }
            acc[(i, j)] += s;
        }
    }
}

/// Index of the spin-qubit pair `(a, b)` (0 = g↓, 1 = g↑) in the 16-level
/// two-atom basis.
fn qubit_index(a: usize, b: usize) -> usize {
    a * ATOM_LEVELS + b
}

/// Restrict a two-atom density matrix to the `{g↓, g↑}⊗{g↓, g↑}` block.
/// The block is not renormalised; its trace is the ground-manifold weight.
pub fn qubit_block(rho_atoms: &CMatrix) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| rho_atoms[(qubit_index(i / 2, i % 2), qubit_index(j / 2, j % 2))])
}

/// Embed a 4×4 two-qubit operator into the 16-level two-atom space.
pub fn embed_qubit_block(m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(ATOMS_DIM, ATOMS_DIM);
    for i in 0..4 {
        for j in 0..4 {
            out[(qubit_index(i / 2, i % 2), qubit_index(j / 2, j % 2))] = m[(i, j)];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

/// `Φ± = (|↑↓⟩ ± |↓↑⟩)/√2` over `{g↓, g↑}⊗{g↓, g↑}`, basis index `2a + b`
/// with 0 = ↓ and 1 = ↑.
pub fn bell_state(sign: BellSign) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::zeros(4);
    v[2] = C64::new(s, 0.0); // |↑↓⟩
    v[1] = C64::new(if sign == BellSign::Plus { s } else { -s }, 0.0); // |↓↑⟩
    &v * v.adjoint()
}

const STATE_TOL: f64 = 1e-8;

fn check_density(rho: &CMatrix) -> Result<()> {
    if hermiticity_defect(rho) > STATE_TOL {
        return Err(QmcsError::InvalidState("not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > STATE_TOL {
        return Err(QmcsError::InvalidState(format!("trace {} differs from 1", tr.re)));
    }
    let (vals, _) = hermitian_eigen(rho);
    if let Some(l) = vals.iter().find(|&&l| l < -STATE_TOL) {
        return Err(QmcsError::InvalidState(format!("negative eigenvalue {l:e}")));
    }
    Ok(())
}

/// Uhlmann fidelity `Tr √(√ρ₁ ρ₂ √ρ₁)`, clamped to `[0, 1]`.
pub fn fidelity(rho1: &CMatrix, rho2: &CMatrix) -> Result<f64> {
    if rho1.shape() != rho2.shape() {
        return Err(QmcsError::Dimension { expected: rho1.nrows(), actual: rho2.nrows() });
    }
    check_density(rho1)?;
    check_density(rho2)?;
    let s = sqrt_psd(rho1);
    let m = &s * rho2 * &s;
    let (vals, _) = hermitian_eigen(&m);
    let f: f64 = vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}
