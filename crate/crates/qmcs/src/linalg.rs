//! Dense Hermitian helpers built on nalgebra's eigensolver.

use nalgebra::{DVector, SymmetricEigen};

use crate::{CMatrix, C64};

/// Eigen-decomposition of a Hermitian matrix (the anti-Hermitian residue is
/// discarded first).
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues, eig.eigenvectors)
}

/// `V f(Λ) V†`
pub fn apply_spectral<F: Fn(f64) -> C64>(values: &DVector<f64>, vectors: &CMatrix, f: F) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &l) in values.iter().enumerate() {
        let w = f(l);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= w;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    apply_spectral(&vals, &vecs, |l| C64::new(0.0, -l * t).exp())
}

/// Principal square root of a positive semidefinite matrix; eigenvalues
/// below zero (round-off) are clamped.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    apply_spectral(&vals, &vecs, |l| C64::new(l.max(0.0).sqrt(), 0.0))
}

/// Trace distance `½ ‖ρ − σ‖₁`.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(&(rho - sigma));
    0.5 * vals.iter().map(|l| l.abs()).sum::<f64>()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Outer product `|ψ⟩⟨ψ|`.
pub fn projector(psi: &crate::CVector) -> CMatrix {
    psi * psi.adjoint()
}
