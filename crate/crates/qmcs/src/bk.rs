//! Two-round Barrett-Kok protocol on top of the quantum-jump solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QmcsError, Result};
use crate::hamiltonian::{build_h0, collapse_channels, Channel, CollapseChannel, TimeDependentOp};
use crate::jump::{CollapseSelection, Evolver, JumpProblem, NoJumpPath, Trajectory, TrajectoryOptions};
use crate::integrate::Tolerance;
use crate::params::{AtomCavityParams, GaussianPulse};
use crate::pulse::{calibrate_pi_pulse, TwoLevelTarget};
use crate::rng::stream;
use crate::space::{atom_transition, build_operators, Factor, HilbertSpace, Level, ATOM_LEVELS};
use crate::states::{accumulate_reduced, bell_state, embed_qubit_block, fidelity, BellSign, ATOMS_DIM};
use crate::{CMatrix, CVector, C64};

/// Steps used to build the microwave propagator.
const MW_STEPS: usize = 4000;

/// Which pair of detectors clicked in rounds one and two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    AA,
    AB,
    BA,
    BB,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::AA, Branch::AB, Branch::BA, Branch::BB];

    /// 1-based branch number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        Self::ALL.get(n.checked_sub(1)?).copied()
    }

    /// Bell state the branch is compared against.
    pub fn target(self) -> BellSign {
        match self {
            Branch::AA => BellSign::Plus,
            _ => BellSign::Minus,
        }
    }

    fn from_clicks(first: Detector, second: Detector) -> Self {
        match (first, second) {
            (Detector::A, Detector::A) => Branch::AA,
            (Detector::A, Detector::B) => Branch::AB,
            (Detector::B, Detector::A) => Branch::BA,
            (Detector::B, Detector::B) => Branch::BB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Detector {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BkConfig {
    pub params: AtomCavityParams,
    /// Width `τ` of the optical π pulses.
    pub optical_width: f64,
    /// Width of the microwave π pulse.
    pub mw_width: f64,
    pub t_wait: f64,
    pub t_relax: f64,
    pub n_traj: usize,
    pub n_traj2: usize,
    /// Initial step of the trajectory integrator; `None` picks one from the
    /// fastest rate in the problem.
    pub dt: Option<f64>,
    pub max_step: f64,
    pub tol: Tolerance,
    /// Memory time in scheduler steps, used by the cost.
    pub t_mem_steps: f64,
    /// Normalisation `𝒩` applied to the branch rates.
    pub normalization: f64,
    #[serde(skip)]
    pub selection: CollapseSelection,
    pub seed: u64,
}

impl Default for BkConfig {
    fn default() -> Self {
        Self {
            params: AtomCavityParams::default(),
            optical_width: 0.02,
            mw_width: 0.1,
            t_wait: 2.0,
            t_relax: 1.0,
            n_traj: 300,
            n_traj2: 300,
            dt: None,
            max_step: 0.5,
            tol: Tolerance { atol: 1e-10, rtol: 1e-8 },
            t_mem_steps: 1000.0,
            normalization: 1.0,
            selection: CollapseSelection::FreshDraw,
            seed: 0,
        }
    }
}

impl BkConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let positive = [
            ("optical_width", self.optical_width),
            ("mw_width", self.mw_width),
            ("t_wait", self.t_wait),
            ("max_step", self.max_step),
            ("t_mem_steps", self.t_mem_steps),
            ("normalization", self.normalization),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QmcsError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_relax >= 0.0) {
            return Err(QmcsError::InvalidParameter(format!("t_relax must be non-negative, got {}", self.t_relax)));
        }
        if self.n_traj == 0 || self.n_traj2 == 0 {
            return Err(QmcsError::InvalidParameter("trajectory counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkResult {
    pub branch_fidelities: [f64; 4],
    pub branch_rates: [f64; 4],
    pub counts: [usize; 4],
    pub cost: f64,
    pub chosen_branch: Branch,
    pub n_traj: usize,
    pub n_traj2: usize,
    pub normalization: f64,
    /// Round-one trajectories that heralded.
    pub heralded_first: usize,
    /// Largest weight, along the round-one no-jump path, on states the
    /// photon cutoff truncates (excited atom with a full cavity).
    pub truncation_population: f64,
}

impl BkResult {
    pub fn fidelity(&self) -> f64 {
        self.branch_fidelities[self.chosen_branch as usize]
    }

    pub fn rate(&self) -> f64 {
        self.branch_rates[self.chosen_branch as usize]
    }

    pub fn total_rate(&self) -> f64 {
        self.branch_rates.iter().sum()
    }
}

/// `min_i 1 − F_i exp(−1/(t_mem R_i))`; zero-rate branches cost 1 and ties
/// go to the lower branch.
pub fn bk_cost(fidelities: &[f64; 4], rates: &[f64; 4], t_mem_steps: f64) -> (f64, Branch) {
    let mut best = (f64::INFINITY, Branch::AA);
    for (k, b) in Branch::ALL.iter().enumerate() {
        let c = if rates[k] > 0.0 { 1.0 - fidelities[k] * (-1.0 / (t_mem_steps * rates[k])).exp() } else { 1.0 };
        if c < best.0 {
            best = (c, *b);
        }
    }
    best
}

fn herald(traj: &Trajectory, channels: &[CollapseChannel], t_wait: f64) -> Option<Detector> {
    let mut clicks = traj.jumps.iter().filter(|j| channels[j.channel].channel.is_detector());
    let first = clicks.next()?;
    if clicks.next().is_some() || first.time > t_wait {
        return None;
    }
    match channels[first.channel].channel {
        Channel::DetectorA => Some(Detector::A),
        _ => Some(Detector::B),
    }
}

fn edge_population(space: &HilbertSpace, psi: &[C64], norm2: f64) -> f64 {
    let top = space.fock_dim - 1;
    let excited = |l: usize| l == Level::ExcitedDown as usize || l == Level::ExcitedUp as usize;
    let w: f64 = psi
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (a, b, na, nb) = space.split(*i);
            (excited(a) && na == top) || (excited(b) && nb == top)
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    w / norm2
}

struct Setup {
    space: HilbertSpace,
    problem: JumpProblem,
    channels: Vec<CollapseChannel>,
    u_pi: CMatrix,
    opts: TrajectoryOptions,
    span: (f64, f64),
}

fn setup(config: &BkConfig) -> Result<Setup> {
    config.validate()?;
    let space = HilbertSpace::default();
    let ops = build_operators(space);
    let p = &config.params;
    let optical = |det: f64| {
        calibrate_pi_pulse(config.optical_width, TwoLevelTarget { detuning: det, decay: 0.0 }, true)
    };
    let pulse_a = optical(p.node_a.detuning_down)?;
    let pulse_b = optical(p.node_b.detuning_down)?;
    let mw = calibrate_pi_pulse(config.mw_width, TwoLevelTarget::resonant(), true)?;
    let h0 = build_h0(&ops, p, pulse_a, pulse_b);
    let channels = collapse_channels(&ops, p);
    let c_ops: Vec<CMatrix> = channels.iter().map(|c| c.op.clone()).collect();
    let rates: Vec<f64> = channels.iter().map(|c| c.rate).collect();
    let problem = JumpProblem::new(&h0, &c_ops, &rates)?;
    let u_pi = microwave_propagator(&space, mw);
    let dt = config.dt.unwrap_or(0.05 / problem.rate_bound());
    let opts = TrajectoryOptions {
        dt,
        max_step: config.max_step.max(dt),
        tol: config.tol,
        selection: config.selection,
    };
    let span = (0.0, config.t_wait + config.t_relax);
    Ok(Setup { space, problem, channels, u_pi, opts, span })
}

/// `U_π` of the microwave flip on both atoms. The drive acts on each atom
/// separately, so the single-atom propagator is built and embedded twice.
pub fn microwave_propagator(space: &HilbertSpace, pulse: GaussianPulse) -> CMatrix {
    let flip = atom_transition(Level::GroundUp, Level::GroundDown) + atom_transition(Level::GroundDown, Level::GroundUp);
    let h = TimeDependentOp { static_part: CMatrix::zeros(ATOM_LEVELS, ATOM_LEVELS), drives: vec![(flip, pulse)] };
    let u = h.propagator(0.0, pulse.end(), MW_STEPS);
    space.embed(&u, Factor::AtomA) * space.embed(&u, Factor::AtomB)
}

struct RoundTwo {
    counts: [usize; 4],
    rho: [CMatrix; 4],
}

/// Run the protocol: round one from `((|g↓⟩+|g↑⟩)/√2)⊗²`, a microwave flip on
/// every heralded state, round two, then per-branch statistics.
pub fn run_bk(config: &BkConfig) -> Result<BkResult> {
    let s = setup(config)?;
    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let plus = [amp, amp, zero, zero];
    let psi0 = s.space.product_state(&plus, &plus);

    let path1 = NoJumpPath::compute(&s.problem, &psi0, s.span, &s.opts)?;
    let truncation_population = path1
        .points()
        .map(|(psi, n2)| edge_population(&s.space, psi, n2))
        .fold(0.0, f64::max);

    let dim = s.problem.dim();
    let first: Vec<(Detector, CVector)> = (0..config.n_traj)
        .into_par_iter()
        .map_init(
            || Evolver::new(dim),
            |ev, k| -> Result<Option<(Detector, CVector)>> {
                let mut rng = stream(config.seed, "bk-round1", k as u64);
                let traj = path1.sample(&s.problem, &s.opts, ev, &mut rng)?;
                Ok(herald(&traj, &s.channels, config.t_wait).map(|d| (d, traj.final_state)))
            },
        )
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let second: Vec<RoundTwo> = first
        .par_iter()
        .enumerate()
        .map(|(k, (d1, psi))| -> Result<RoundTwo> {
            let flipped = &s.u_pi * psi;
            let flipped = &flipped / C64::new(flipped.norm(), 0.0);
            let path = NoJumpPath::compute(&s.problem, &flipped, s.span, &s.opts)?;
            let mut ev = Evolver::new(dim);
            let mut out = RoundTwo { counts: [0; 4], rho: std::array::from_fn(|_| CMatrix::zeros(ATOMS_DIM, ATOMS_DIM)) };
            for j in 0..config.n_traj2 {
                let idx = (k * config.n_traj2 + j) as u64;
                let mut rng = stream(config.seed, "bk-round2", idx);
                let traj = path.sample(&s.problem, &s.opts, &mut ev, &mut rng)?;
                if let Some(d2) = herald(&traj, &s.channels, config.t_wait) {
                    let b = Branch::from_clicks(*d1, d2) as usize;
                    out.counts[b] += 1;
                    accumulate_reduced(&s.space, &traj.final_state, &mut out.rho[b]);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = [0usize; 4];
    let mut rho: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(ATOMS_DIM, ATOMS_DIM));
    for r in &second {
        for b in 0..4 {
            counts[b] += r.counts[b];
            rho[b] += &r.rho[b];
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(QmcsError::Degenerate { n_traj: config.n_traj });
    }

    let total = (config.n_traj * config.n_traj2) as f64;
    let mut branch_fidelities = [0.0; 4];
    let mut branch_rates = [0.0; 4];
    for b in Branch::ALL {
        let k = b as usize;
        branch_rates[k] = counts[k] as f64 * config.normalization / total;
        if counts[k] > 0 {
            let mut avg = &rho[k] / C64::new(counts[k] as f64, 0.0);
            avg = (&avg + avg.adjoint()) * C64::new(0.5, 0.0);
            let target = embed_qubit_block(&bell_state(b.target()));
            branch_fidelities[k] = fidelity(&avg, &target)?;
        }
    }
    let (cost, chosen_branch) = bk_cost(&branch_fidelities, &branch_rates, config.t_mem_steps);
    Ok(BkResult {
        branch_fidelities,
        branch_rates,
        counts,
        cost,
        chosen_branch,
        n_traj: config.n_traj,
        n_traj2: config.n_traj2,
        normalization: config.normalization,
        heralded_first: first.len(),
        truncation_population,
    })
}
