//! Dense Lindblad master-equation integration.

use crate::error::{QmcsError, Result};
use crate::hamiltonian::TimeDependentOp;
use crate::jump::effective_hamiltonian;
use crate::linalg::{hermitian_eigen, hermiticity_defect, trace};
use crate::{CMatrix, C64};

const TRACE_TOLERANCE: f64 = 1e-6;

struct Lindbladian<'a> {
    h: &'a TimeDependentOp,
    /// `H_eff` built from the static part.
    h_eff_static: CMatrix,
    collapse: Vec<(CMatrix, CMatrix, f64)>,
}

impl<'a> Lindbladian<'a> {
    fn new(h: &'a TimeDependentOp, collapse_ops: &[CMatrix], rates: &[f64]) -> Self {
        let h_eff_static = effective_hamiltonian(&h.static_part, collapse_ops, rates);
        let collapse = collapse_ops
            .iter()
            .zip(rates)
            .filter(|(_, &g)| g > 0.0)
            .map(|(c, &g)| (c.clone(), c.adjoint(), g))
            .collect();
        Self { h, h_eff_static, collapse }
    }

    /// `dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ γ C ρ C†`
    fn apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let mut h_eff = self.h_eff_static.clone();
        for (d, pulse) in &self.h.drives {
            h_eff += d * C64::new(pulse.value(t), 0.0);
        }
        let hr = &h_eff * rho;
        let mut out = (&hr - hr.adjoint()) * C64::new(0.0, -1.0);
        // (H_eff ρ)† = ρ H_eff† because ρ is Hermitian.
        for (c, cd, g) in &self.collapse {
            out += (c * rho * cd) * C64::new(*g, 0.0);
        }
        out
    }
}

fn validate_density(rho: &CMatrix, tol: f64) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(QmcsError::InvalidState("density matrix is not square".into()));
    }
    if hermiticity_defect(rho) > tol {
        return Err(QmcsError::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(QmcsError::InvalidState(format!("trace is {tr}")));
    }
    let (vals, _) = hermitian_eigen(rho);
    if let Some(l) = vals.iter().find(|&&l| l < -tol) {
        return Err(QmcsError::InvalidState(format!("negative eigenvalue {l:e}")));
    }
    Ok(())
}

/// Integrate the master equation with fixed-step RK4 and return `ρ` at each
/// requested time (sorted, within `t_span`).
pub fn evolve_master_equation_at(
    h: &TimeDependentOp,
    collapse_ops: &[CMatrix],
    rates: &[f64],
    rho0: &CMatrix,
    t_span: (f64, f64),
    dt: f64,
    times: &[f64],
) -> Result<Vec<CMatrix>> {
    validate_density(rho0, 1e-10)?;
    if rho0.nrows() != h.dim() {
        return Err(QmcsError::Dimension { expected: h.dim(), actual: rho0.nrows() });
    }
    if !(dt > 0.0) {
        return Err(QmcsError::InvalidParameter("dt must be positive".into()));
    }
    let l = Lindbladian::new(h, collapse_ops, rates);
    let mut rho = rho0.clone();
    let mut t = t_span.0;
    let mut out = Vec::with_capacity(times.len());
    let mut pending = times.iter().copied().peekable();
    let half = C64::new(0.5, 0.0);
    loop {
        while let Some(&next) = pending.peek() {
            if next <= t + 1e-12 {
                out.push(rho.clone());
                pending.next();
            } else {
                break;
            }
        }
        if t >= t_span.1 - 1e-12 {
            break;
        }
        let target = pending.peek().copied().unwrap_or(t_span.1).min(t_span.1);
        let h_step = dt.min(target - t);
        let k1 = l.apply(t, &rho);
        let k2 = l.apply(t + 0.5 * h_step, &(&rho + &k1 * C64::new(0.5 * h_step, 0.0)));
        let k3 = l.apply(t + 0.5 * h_step, &(&rho + &k2 * C64::new(0.5 * h_step, 0.0)));
        let k4 = l.apply(t + h_step, &(&rho + &k3 * C64::new(h_step, 0.0)));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h_step / 6.0, 0.0);
        rho = (&rho + rho.adjoint()) * half;
        t += h_step;
        let drift = (trace(&rho).re - 1.0).abs();
        if !drift.is_finite() || drift > TRACE_TOLERANCE {
            return Err(QmcsError::TraceDrift { time: t, drift });
        }
    }
    Ok(out)
}

/// Integrate `dρ/dt = −i[H, ρ] + Σ γ (C ρ C† − ½{C†C, ρ})` over `t_span`.
pub fn evolve_master_equation(
    h: &TimeDependentOp,
    collapse_ops: &[CMatrix],
    rates: &[f64],
    rho0: &CMatrix,
    t_span: (f64, f64),
    dt: f64,
) -> Result<CMatrix> {
    let mut v = evolve_master_equation_at(h, collapse_ops, rates, rho0, t_span, dt, &[t_span.1])?;
    Ok(v.pop().expect("final time is always sampled"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projector, unitary_propagator};
    use crate::CVector;

    fn sigma_minus() -> CMatrix {
        let mut sm = CMatrix::zeros(2, 2);
        sm[(0, 1)] = C64::new(1.0, 0.0);
        sm
    }

    #[test]
    fn unitary_evolution_matches_propagator() {
        let h = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(i as f64 * 0.7, 0.0)
            } else {
                C64::new(0.3, if i < j { 0.2 } else { -0.2 })
            }
        });
        let psi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let rho0 = projector(&psi);
        let rho = evolve_master_equation(&TimeDependentOp::constant(h.clone()), &[], &[], &rho0, (0.0, 2.0), 1e-3).unwrap();
        let u = unitary_propagator(&h, 2.0);
        let exact = &u * &rho0 * u.adjoint();
        assert!((rho - exact).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-8);
    }

    #[test]
    fn two_level_decay_is_exponential() {
        let mut rho0 = CMatrix::zeros(2, 2);
        rho0[(1, 1)] = C64::new(1.0, 0.0);
        let h = TimeDependentOp::constant(CMatrix::zeros(2, 2));
        let times = [0.5, 1.0, 2.0];
        let out = evolve_master_equation_at(&h, &[sigma_minus()], &[1.5], &rho0, (0.0, 2.0), 1e-3, &times).unwrap();
        for (rho, t) in out.iter().zip(times) {
            assert!((rho[(1, 1)].re - (-1.5 * t).exp()).abs() < 1e-6);
            assert!((trace(rho).re - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_non_density_input() {
        let h = TimeDependentOp::constant(CMatrix::zeros(2, 2));
        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 0)] = C64::new(1.5, 0.0);
        bad[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(evolve_master_equation(&h, &[], &[], &bad, (0.0, 1.0), 0.01).is_err());
    }
}
