//! Small reference problems for checking the trajectory solver against the
//! master equation.

use crate::error::Result;
use crate::hamiltonian::TimeDependentOp;
use crate::jump::{mc_trajectory, JumpProblem, TrajectoryOptions};
use crate::linalg::{projector, trace_distance};
use crate::master::evolve_master_equation;
use crate::params::GaussianPulse;
use crate::rng::stream;
use crate::space::{annihilation, atom_transition, Level, ATOM_LEVELS};
use crate::{CMatrix, CVector, C64};

/// An open system with a pure initial state.
pub struct Benchmark {
    pub h: TimeDependentOp,
    pub collapse_ops: Vec<CMatrix>,
    pub rates: Vec<f64>,
    pub psi0: CVector,
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn problem(&self) -> Result<JumpProblem> {
        JumpProblem::new(&self.h, &self.collapse_ops, &self.rates)
    }

    /// Largest initial step the trajectory solver accepts.
    pub fn default_dt(&self) -> Result<f64> {
        Ok(0.05 / self.problem()?.rate_bound())
    }

    pub fn master(&self, t_end: f64, dt: f64) -> Result<CMatrix> {
        evolve_master_equation(&self.h, &self.collapse_ops, &self.rates, &projector(&self.psi0), (0.0, t_end), dt)
    }

    /// Average of `|ψ⟩⟨ψ|` over `n_traj` trajectories ending at `t_end`.
    pub fn ensemble(&self, n_traj: usize, t_end: f64, seed: u64) -> Result<CMatrix> {
        let problem = self.problem()?;
        let opts = TrajectoryOptions::with_dt(self.default_dt()?);
        let mut acc = CMatrix::zeros(self.dim(), self.dim());
        for k in 0..n_traj {
            let mut rng = stream(seed, "benchmark", k as u64);
            let traj = mc_trajectory(&problem, &self.psi0, (0.0, t_end), &opts, &mut rng)?;
            acc += projector(&traj.final_state);
        }
        Ok(acc / C64::new(n_traj as f64, 0.0))
    }

    /// Trace distance between the trajectory ensemble and the master
    /// equation at `t_end`.
    pub fn ensemble_distance(&self, n_traj: usize, t_end: f64, seed: u64) -> Result<f64> {
        let rho = self.master(t_end, 1e-3)?;
        Ok(trace_distance(&self.ensemble(n_traj, t_end, seed)?, &rho))
    }
}

/// Two-level atom `{g, e}` decaying at `gamma` from `|e⟩`.
pub fn two_level_decay(gamma: f64) -> Benchmark {
    let mut sm = CMatrix::zeros(2, 2);
    sm[(0, 1)] = C64::new(1.0, 0.0);
    Benchmark {
        h: TimeDependentOp::constant(CMatrix::zeros(2, 2)),
        collapse_ops: vec![sm],
        rates: vec![gamma],
        psi0: CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
    }
}

/// One driven four-level atom in a single-photon cavity (dimension 8):
/// Jaynes-Cummings coupling on `g↓ ↔ u↓`, a Gaussian drive, spontaneous and
/// spin-flipping decay and cavity leakage. Starts in `|g↓, 0⟩`.
pub fn atom_cavity() -> Benchmark {
    let fock = 2;
    let id_atom = CMatrix::identity(ATOM_LEVELS, ATOM_LEVELS);
    let id_cav = CMatrix::identity(fock, fock);
    let atom = |m: CMatrix| m.kronecker(&id_cav);
    let a = id_atom.kronecker(&annihilation(fock));
    let sp = atom(atom_transition(Level::ExcitedDown, Level::GroundDown));
    let sm = sp.adjoint();
    let flip = atom(atom_transition(Level::GroundUp, Level::ExcitedDown));
    let g = C64::new(2.0, 0.0);
    let coupling = (&sp * &a + &sm * a.adjoint()) * g;
    let h = TimeDependentOp {
        static_part: -coupling,
        drives: vec![(&sp + &sm, GaussianPulse::with_width(4.0, 0.2))],
    };
    let mut psi0 = CVector::zeros(ATOM_LEVELS * fock);
    psi0[0] = C64::new(1.0, 0.0);
    Benchmark { h, collapse_ops: vec![sm, flip, a], rates: vec![1.0, 0.2, 3.0], psi0 }
}
