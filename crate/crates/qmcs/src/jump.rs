//! Monte Carlo wave-function (quantum-jump) trajectories.
//!
//! Between jumps the state follows `i dψ/dt = H_eff ψ` without
//! renormalisation. A jump happens when `‖ψ‖²` falls to a uniform draw `r`;
//! the crossing time is bisected, a collapse operator is chosen from the
//! instantaneous probabilities `γ_n ‖C_n ψ‖²`, and the state is projected
//! and renormalised.

use rand::Rng;

use crate::error::{QmcsError, Result};
use crate::hamiltonian::TimeDependentOp;
use crate::integrate::{next_step, DormandPrince, Tolerance};
use crate::params::GaussianPulse;
use crate::sparse::CsrMatrix;
use crate::{CMatrix, CVector, C64};

/// `H_eff = H − (i/2) Σ γ_n C_n† C_n`.
pub fn effective_hamiltonian(h: &CMatrix, collapse_ops: &[CMatrix], rates: &[f64]) -> CMatrix {
    assert_eq!(collapse_ops.len(), rates.len(), "one rate per collapse operator");
    let mut out = h.clone();
    for (c, &g) in collapse_ops.iter().zip(rates) {
        out -= (c.adjoint() * c) * C64::new(0.0, 0.5 * g);
    }
    out
}

/// How the collapse operator is picked once a jump is due.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollapseSelection {
    /// Draw a fresh uniform number for the operator choice.
    #[default]
    FreshDraw,
    /// Re-use the norm threshold `r` for the choice as well.
    ReuseThreshold,
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Initial step; the jump time is bisected to `dt / 100`.
    pub dt: f64,
    /// Upper bound on adaptive steps.
    pub max_step: f64,
    pub tol: Tolerance,
    pub selection: CollapseSelection,
}

impl TrajectoryOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, max_step: 20.0 * dt, tol: Tolerance::default(), selection: CollapseSelection::FreshDraw }
    }
}

struct JumpOp {
    op: CsrMatrix,
    rate: f64,
    index: usize,
}

/// A time-dependent effective Hamiltonian plus its jump operators, in the
/// sparse form the integrator uses.
pub struct JumpProblem {
    dim: usize,
    /// `−i · H_eff,static`
    static_rhs: CsrMatrix,
    /// `(−i · D_k, Ω_k)`
    drive_rhs: Vec<(CsrMatrix, GaussianPulse)>,
    jumps: Vec<JumpOp>,
    rate_bound: f64,
}

impl JumpProblem {
    /// Collapse operators with zero rate are dropped; reported jump indices
    /// refer to positions in `collapse_ops`.
    pub fn new(h: &TimeDependentOp, collapse_ops: &[CMatrix], rates: &[f64]) -> Result<Self> {
        if collapse_ops.len() != rates.len() {
            return Err(QmcsError::InvalidParameter("collapse operators and rates differ in length".into()));
        }
        let dim = h.dim();
        for c in collapse_ops {
            if c.nrows() != dim {
                return Err(QmcsError::Dimension { expected: dim, actual: c.nrows() });
            }
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0)) {
            return Err(QmcsError::InvalidParameter(format!("negative collapse rate {r}")));
        }
        let h_eff = effective_hamiltonian(&h.static_part, collapse_ops, rates);
        let minus_i = C64::new(0.0, -1.0);
        let mut rate_bound = row_sum_bound(&h_eff);
        let drive_rhs = h
            .drives
            .iter()
            .map(|(d, p)| {
                rate_bound += p.amplitude.abs() * row_sum_bound(d);
                (CsrMatrix::from_dense(&(d * minus_i)), *p)
            })
            .collect();
        let jumps = collapse_ops
            .iter()
            .zip(rates)
            .enumerate()
            .filter(|(_, (_, &g))| g > 0.0)
            .map(|(index, (c, &rate))| JumpOp { op: CsrMatrix::from_dense(c), rate, index })
            .collect();
        Ok(Self { dim, static_rhs: CsrMatrix::from_dense(&(h_eff * minus_i)), drive_rhs, jumps, rate_bound })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the generator norm (maximum absolute row sum).
    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    #[inline]
    fn rhs(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.static_rhs.mul_into(psi, out);
        for (d, pulse) in &self.drive_rhs {
            let w = pulse.value(t);
            if w.abs() > 1e-14 {
                d.mul_add_into(C64::new(w, 0.0), psi, out);
            }
        }
    }
}

fn row_sum_bound(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    /// Index into the collapse list the problem was built from.
    pub channel: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub jumps: Vec<Jump>,
    /// Normalised state at the end of the span.
    pub final_state: CVector,
}

/// A point on an integration path: state and the step size to try next.
#[derive(Clone)]
struct PathPoint {
    t: f64,
    h: f64,
    psi: Vec<C64>,
    norm2: f64,
}

enum SegmentEnd {
    /// Norm fell to the threshold at `t`; `psi` holds the pre-jump state.
    Crossed { t: f64, h: f64 },
    Finished,
}

/// Integration work space, reusable across trajectories of the same size.
pub struct Evolver {
    dp: DormandPrince,
    trial: Vec<C64>,
    lo: Vec<C64>,
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl Evolver {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { dp: DormandPrince::new(dim), trial: z.clone(), lo: z }
    }

    /// Integrate from `start` until `‖ψ‖² ≤ r` or `t_end`. `on_accept` sees
    /// every accepted step that stays above the threshold.
    fn advance<F>(
        &mut self,
        problem: &JumpProblem,
        start: &PathPoint,
        psi: &mut Vec<C64>,
        t_end: f64,
        r: f64,
        opts: &TrajectoryOptions,
        mut on_accept: F,
    ) -> Result<SegmentEnd>
    where
        F: FnMut(f64, f64, &[C64], f64),
    {
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| problem.rhs(t, y, dy);
        let mut t = start.t;
        let mut h = start.h.min(opts.max_step);
        psi.clear();
        psi.extend_from_slice(&start.psi);
        let resolution = opts.dt / 100.0;
        while t < t_end {
            let step = h.min(t_end - t);
            let err = self.dp.step(&mut f, t, psi, step, &mut self.trial, opts.tol);
            if !err.is_finite() {
                return Err(QmcsError::Integration { time: t, reason: "non-finite state".into() });
            }
            if err > 1.0 {
                h = next_step(step, err);
                if h < 1e-12 {
                    return Err(QmcsError::Integration { time: t, reason: "step size underflow".into() });
                }
                continue;
            }
            let n_new = norm2(&self.trial);
            if n_new <= r {
                // Bisect the crossing inside [t, t + step].
                self.lo.copy_from_slice(psi);
                let (mut lo, mut hi) = (0.0, step);
                let mut hi_state = self.trial.clone();
                while hi - lo > resolution {
                    let mid = 0.5 * (lo + hi);
                    self.dp.step(&mut f, t + lo, &self.lo, mid - lo, &mut self.trial, opts.tol);
                    if norm2(&self.trial) > r {
                        lo = mid;
                        self.lo.copy_from_slice(&self.trial);
                    } else {
                        hi = mid;
                        hi_state.copy_from_slice(&self.trial);
                    }
                }
                psi.copy_from_slice(&hi_state);
                return Ok(SegmentEnd::Crossed { t: t + hi, h: next_step(step, err) });
            }
            t += step;
            psi.copy_from_slice(&self.trial);
            h = next_step(step, err).min(opts.max_step);
            on_accept(t, h, psi, n_new);
        }
        Ok(SegmentEnd::Finished)
    }

    fn collapse<R: Rng>(
        problem: &JumpProblem,
        psi: &mut [C64],
        r: f64,
        selection: CollapseSelection,
        rng: &mut R,
        scratch: &mut [C64],
    ) -> Option<usize> {
        let weights: Vec<f64> = problem.jumps.iter().map(|j| j.rate * j.op.norm_sqr_of_product(psi)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let u = match selection {
            CollapseSelection::FreshDraw => rng.random::<f64>(),
            CollapseSelection::ReuseThreshold => r,
        } * total;
        let mut acc = 0.0;
        let mut chosen = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if acc >= u && *w > 0.0 {
                chosen = k;
                break;
            }
        }
        let op = &problem.jumps[chosen].op;
        op.mul_into(psi, scratch);
        let n = norm2(scratch).sqrt();
        for (p, s) in psi.iter_mut().zip(scratch.iter()) {
            *p = *s / n;
        }
        Some(problem.jumps[chosen].index)
    }

    /// Run one trajectory from `start` to `t_end`.
    fn run_from<R: Rng>(
        &mut self,
        problem: &JumpProblem,
        mut start: PathPoint,
        t_end: f64,
        opts: &TrajectoryOptions,
        rng: &mut R,
        mut jumps: Vec<Jump>,
        first_r: Option<f64>,
    ) -> Result<Trajectory> {
        let mut psi = Vec::with_capacity(problem.dim);
        let mut scratch = vec![C64::new(0.0, 0.0); problem.dim];
        let mut r = first_r.unwrap_or_else(|| rng.random::<f64>());
        loop {
            match self.advance(problem, &start, &mut psi, t_end, r, opts, |_, _, _, _| {})? {
                SegmentEnd::Finished => break,
                SegmentEnd::Crossed { t, h } => {
                    match Self::collapse(problem, &mut psi, r, opts.selection, rng, &mut scratch) {
                        Some(channel) => jumps.push(Jump { time: t, channel }),
                        None => {
                            return Err(QmcsError::Integration {
                                time: t,
                                reason: "norm decayed but no collapse channel is active".into(),
                            })
                        }
                    }
                    start = PathPoint { t, h, psi: psi.clone(), norm2: 1.0 };
                    r = rng.random::<f64>();
                }
            }
        }
        let n = norm2(&psi).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(QmcsError::Integration { time: t_end, reason: "state vanished".into() });
        }
        let final_state = CVector::from_iterator(psi.len(), psi.iter().map(|z| *z / n));
        Ok(Trajectory { jumps, final_state })
    }
}

fn check_initial(problem: &JumpProblem, psi0: &CVector, opts: &TrajectoryOptions) -> Result<()> {
    if psi0.len() != problem.dim {
        return Err(QmcsError::Dimension { expected: problem.dim, actual: psi0.len() });
    }
    if (psi0.norm_squared() - 1.0).abs() > 1e-9 {
        return Err(QmcsError::InvalidState(format!("initial state has norm² {}", psi0.norm_squared())));
    }
    if !(opts.dt > 0.0) || opts.dt * problem.rate_bound > 0.05 + 1e-12 {
        return Err(QmcsError::InvalidParameter(format!(
            "dt = {} does not resolve the fastest rate {:.3} (need dt·rate ≤ 0.05)",
            opts.dt, problem.rate_bound
        )));
    }
    Ok(())
}

/// Integrate a single quantum-jump trajectory over `t_span`.
pub fn mc_trajectory<R: Rng>(
    problem: &JumpProblem,
    psi0: &CVector,
    t_span: (f64, f64),
    opts: &TrajectoryOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    check_initial(problem, psi0, opts)?;
    let start = PathPoint { t: t_span.0, h: opts.dt, psi: psi0.iter().copied().collect(), norm2: 1.0 };
    Evolver::new(problem.dim).run_from(problem, start, t_span.1, opts, rng, Vec::new(), None)
}

/// The jump-free evolution from one initial state, recorded once and shared
/// by every trajectory that starts there. Sampling a trajectory from the
/// path gives the same result as [`mc_trajectory`] with the same generator.
pub struct NoJumpPath {
    points: Vec<PathPoint>,
    t_end: f64,
}

impl NoJumpPath {
    pub fn compute(problem: &JumpProblem, psi0: &CVector, t_span: (f64, f64), opts: &TrajectoryOptions) -> Result<Self> {
        check_initial(problem, psi0, opts)?;
        let start = PathPoint { t: t_span.0, h: opts.dt, psi: psi0.iter().copied().collect(), norm2: 1.0 };
        let mut points = vec![start.clone()];
        let mut ev = Evolver::new(problem.dim);
        let mut psi = Vec::new();
        ev.advance(problem, &start, &mut psi, t_span.1, 0.0, opts, |t, h, psi, norm2| {
            points.push(PathPoint { t, h, psi: psi.to_vec(), norm2 })
        })?;
        Ok(Self { points, t_end: t_span.1 })
    }

    /// Recorded `(state, norm²)` pairs along the path.
    pub fn points(&self) -> impl Iterator<Item = (&[C64], f64)> {
        self.points.iter().map(|p| (p.psi.as_slice(), p.norm2))
    }

    /// Squared norm left at the end of the span (the no-jump probability).
    pub fn survival(&self) -> f64 {
        self.points.last().map_or(1.0, |p| p.norm2)
    }

    pub fn sample<R: Rng>(&self, problem: &JumpProblem, opts: &TrajectoryOptions, ev: &mut Evolver, rng: &mut R) -> Result<Trajectory> {
        let r: f64 = rng.random();
        // norm² is non-increasing along the path; find the last point above r.
        let idx = self.points.partition_point(|p| p.norm2 > r);
        if idx == self.points.len() {
            let last = self.points.last().expect("path has a start point");
            let n = last.norm2.sqrt();
            let final_state = CVector::from_iterator(last.psi.len(), last.psi.iter().map(|z| *z / n));
            return Ok(Trajectory { jumps: Vec::new(), final_state });
        }
        let start = self.points[idx.saturating_sub(1)].clone();
        ev.run_from(problem, start, self.t_end, opts, rng, Vec::new(), Some(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn two_level_decay(gamma: f64) -> (JumpProblem, CVector) {
        // basis {g, e}; σ⁻ = |g⟩⟨e|
        let h = TimeDependentOp::constant(CMatrix::zeros(2, 2));
        let mut sm = CMatrix::zeros(2, 2);
        sm[(0, 1)] = C64::new(1.0, 0.0);
        let p = JumpProblem::new(&h, &[sm], &[gamma]).unwrap();
        (p, CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]))
    }

    #[test]
    fn effective_hamiltonian_two_level_shift() {
        let mut sm = CMatrix::zeros(2, 2);
        sm[(0, 1)] = C64::new(1.0, 0.0);
        let heff = effective_hamiltonian(&CMatrix::zeros(2, 2), &[sm], &[0.8]);
        assert!((heff[(1, 1)] - C64::new(0.0, -0.4)).norm() < 1e-15);
        assert_eq!(heff[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn effective_hamiltonian_without_collapse_is_h() {
        let h = CMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        assert_eq!(effective_hamiltonian(&h, &[], &[]), h);
    }

    #[test]
    fn anti_hermitian_part_is_negative() {
        let c = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.1));
        let heff = effective_hamiltonian(&CMatrix::zeros(3, 3), &[c], &[1.3]);
        let anti = (&heff - heff.adjoint()) * C64::new(0.0, 0.5); // = Σ γ C†C / 2 ⪰ 0
        let eig = nalgebra::SymmetricEigen::new(anti).eigenvalues;
        assert!(eig.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn unitary_limit_conserves_norm() {
        let mut hm = CMatrix::zeros(2, 2);
        hm[(0, 1)] = C64::new(1.0, 0.0);
        hm[(1, 0)] = C64::new(1.0, 0.0);
        let problem = JumpProblem::new(&TimeDependentOp::constant(hm), &[], &[]).unwrap();
        let psi0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let mut rng = stream(1, "test", 0);
        let opts = TrajectoryOptions::with_dt(0.01);
        let path = NoJumpPath::compute(&problem, &psi0, (0.0, 10.0), &opts).unwrap();
        assert!((path.survival() - 1.0).abs() < 1e-9);
        let traj = mc_trajectory(&problem, &psi0, (0.0, 10.0), &opts, &mut rng).unwrap();
        assert!(traj.jumps.is_empty());
        // |ψ(t)⟩ = cos t |0⟩ − i sin t |1⟩
        assert!((traj.final_state[0].re - 10f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn single_decay_jumps_once() {
        let (problem, psi0) = two_level_decay(1.0);
        let opts = TrajectoryOptions::with_dt(0.01);
        let mut rng = stream(2, "test", 0);
        let traj = mc_trajectory(&problem, &psi0, (0.0, 40.0), &opts, &mut rng).unwrap();
        assert_eq!(traj.jumps.len(), 1);
        assert!((traj.final_state[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_path_matches_direct_integration() {
        let (problem, psi0) = two_level_decay(1.3);
        let opts = TrajectoryOptions::with_dt(0.01);
        let path = NoJumpPath::compute(&problem, &psi0, (0.0, 6.0), &opts).unwrap();
        let mut ev = Evolver::new(2);
        for k in 0..50 {
            let a = mc_trajectory(&problem, &psi0, (0.0, 6.0), &opts, &mut stream(3, "t", k)).unwrap();
            let b = path.sample(&problem, &opts, &mut ev, &mut stream(3, "t", k)).unwrap();
            assert_eq!(a.jumps.len(), b.jumps.len());
            for (x, y) in a.jumps.iter().zip(&b.jumps) {
                assert_eq!(x.channel, y.channel);
                assert!((x.time - y.time).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_coarse_step() {
        let (problem, psi0) = two_level_decay(100.0);
        let opts = TrajectoryOptions::with_dt(0.01);
        assert!(mc_trajectory(&problem, &psi0, (0.0, 1.0), &opts, &mut stream(0, "t", 0)).is_err());
    }

    #[test]
    fn norm_is_monotone_between_jumps() {
        let (problem, _) = two_level_decay(0.7);
        let psi0 = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let path = NoJumpPath::compute(&problem, &psi0, (0.0, 5.0), &TrajectoryOptions::with_dt(0.01)).unwrap();
        for w in path.points.windows(2) {
            assert!(w[1].norm2 <= w[0].norm2 + 1e-15);
        }
    }
}
