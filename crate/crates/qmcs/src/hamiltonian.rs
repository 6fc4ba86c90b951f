//! Two-node Hamiltonians and the collapse-operator set.

use crate::params::{AtomCavityParams, GaussianPulse, NodeParams};
use crate::space::{NodeOperators, Operators};
use crate::{CMatrix, C64};

/// `H(t) = H_static + Σ_k Ω_k(t) · D_k` with Hermitian `H_static` and `D_k`.
#[derive(Debug, Clone)]
pub struct TimeDependentOp {
    pub static_part: CMatrix,
    pub drives: Vec<(CMatrix, GaussianPulse)>,
}

impl TimeDependentOp {
    pub fn constant(h: CMatrix) -> Self {
        Self { static_part: h, drives: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.static_part.nrows()
    }

    /// Time-ordered propagator over `[t0, t1]`, integrated column by column
    /// with `steps` RK4 steps.
    pub fn propagator(&self, t0: f64, t1: f64, steps: usize) -> CMatrix {
        use crate::integrate::Rk4;
        use crate::sparse::CsrMatrix;
        let n = self.dim();
        let minus_i = C64::new(0.0, -1.0);
        let s = CsrMatrix::from_dense(&(&self.static_part * minus_i));
        let drives: Vec<_> = self.drives.iter().map(|(d, p)| (CsrMatrix::from_dense(&(d * minus_i)), *p)).collect();
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| {
            s.mul_into(y, dy);
            for (d, p) in &drives {
                d.mul_add_into(C64::new(p.value(t), 0.0), y, dy);
            }
        };
        let h = (t1 - t0) / steps as f64;
        let mut rk = Rk4::new(n);
        let mut u = CMatrix::zeros(n, n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            for k in 0..steps {
                rk.step(&mut f, t0 + k as f64 * h, &mut col, h);
            }
            for i in 0..n {
                u[(i, j)] = col[i];
            }
        }
        u
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut h = self.static_part.clone();
        for (d, pulse) in &self.drives {
            h += d * C64::new(pulse.value(t), 0.0);
        }
        h
    }
}

/// Which physical process a collapse operator stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    SpontaneousDownA,
    SpontaneousDownB,
    SpontaneousUpA,
    SpontaneousUpB,
    SpinFlipDownUpA,
    SpinFlipDownUpB,
    SpinFlipUpDownA,
    SpinFlipUpDownB,
    DephasingDownA,
    DephasingDownB,
    DephasingUpA,
    DephasingUpB,
    CavityLossA,
    CavityLossB,
    DetectorA,
    DetectorB,
}

impl Channel {
    pub fn is_detector(self) -> bool {
        matches!(self, Channel::DetectorA | Channel::DetectorB)
    }
}

#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub channel: Channel,
    pub op: CMatrix,
    pub rate: f64,
}

fn node_h0(ops: &NodeOperators, p: &NodeParams) -> CMatrix {
    let c = |x: f64| C64::new(x, 0.0);
    let a = &ops.cavity;
    let n_photon = a.adjoint() * a;
    // The ↑ optical transition is taken as infinitely detuned and dropped.
    let coupling = &ops.sp_down * a + &ops.sm_down * a.adjoint();
    n_photon * c(p.detuning_cavity) + &ops.sz_down * c(0.5 * p.detuning_down) - coupling * c(p.g)
}

fn node_drive(ops: &NodeOperators) -> CMatrix {
    &ops.sp_down + &ops.sm_down
}

/// Driven two-node Hamiltonian `H₀(t)` with optical pulses on `g↓ ↔ u↓`.
pub fn build_h0(ops: &Operators, params: &AtomCavityParams, pulse_a: GaussianPulse, pulse_b: GaussianPulse) -> TimeDependentOp {
    let static_part = node_h0(&ops.node_a, &params.node_a) + node_h0(&ops.node_b, &params.node_b);
    TimeDependentOp {
        static_part,
        drives: vec![(node_drive(&ops.node_a), pulse_a), (node_drive(&ops.node_b), pulse_b)],
    }
}

/// Microwave spin-flip Hamiltonian `H_π(t)` acting on `g↓ ↔ g↑` of both atoms.
pub fn build_h_pi(ops: &Operators, pulse: GaussianPulse) -> TimeDependentOp {
    let d = &ops.node_a.mw_plus + &ops.node_a.mw_minus + &ops.node_b.mw_plus + &ops.node_b.mw_minus;
    TimeDependentOp { static_part: CMatrix::zeros(d.nrows(), d.ncols()), drives: vec![(d, pulse)] }
}

/// Full collapse set, in a fixed order. Channels with zero rate are kept so
/// callers can filter them.
pub fn collapse_channels(ops: &Operators, params: &AtomCavityParams) -> Vec<CollapseChannel> {
    use Channel::*;
    let (a, b) = (&ops.node_a, &ops.node_b);
    let (pa, pb) = (&params.node_a, &params.node_b);
    let list: Vec<(Channel, &CMatrix, f64)> = vec![
        (SpontaneousDownA, &a.sm_down, pa.gamma),
        (SpontaneousDownB, &b.sm_down, pb.gamma),
        (SpontaneousUpA, &a.sm_up, pa.gamma),
        (SpontaneousUpB, &b.sm_up, pb.gamma),
        (SpinFlipDownUpA, &a.sm_down_up, pa.spin_flip_rate()),
        (SpinFlipDownUpB, &b.sm_down_up, pb.spin_flip_rate()),
        (SpinFlipUpDownA, &a.sm_up_down, pa.spin_flip_rate()),
        (SpinFlipUpDownB, &b.sm_up_down, pb.spin_flip_rate()),
        (DephasingDownA, &a.sz_down, pa.k_dep),
        (DephasingDownB, &b.sz_down, pb.k_dep),
        (DephasingUpA, &a.sz_up, pa.k_dep),
        (DephasingUpB, &b.sz_up, pb.k_dep),
        (CavityLossA, &a.cavity, pa.kappa),
        (CavityLossB, &b.cavity, pb.kappa),
        (DetectorA, &ops.det_a, pa.k_det),
        (DetectorB, &ops.det_b, pb.k_det),
    ];
    list.into_iter()
        .map(|(channel, op, rate)| CollapseChannel { channel, op: op.clone(), rate })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_operators, max_abs, HilbertSpace, Level};

    fn setup() -> Operators {
        build_operators(HilbertSpace::default())
    }

    #[test]
    fn h0_is_hermitian() {
        let ops = setup();
        let params = AtomCavityParams {
            node_a: NodeParams { detuning_cavity: 0.3, detuning_down: -1.2, g: 2.5, ..Default::default() },
            node_b: NodeParams { detuning_cavity: -0.7, detuning_down: 0.4, g: 4.0, ..Default::default() },
        };
        let h = build_h0(&ops, &params, GaussianPulse::with_width(3.0, 0.1), GaussianPulse::with_width(2.0, 0.2));
        for t in [0.0, 0.2, 0.4, 0.9] {
            let m = h.at(t);
            assert!(max_abs(&(&m - m.adjoint())) < 1e-14);
        }
    }

    #[test]
    fn undriven_uncoupled_h0_is_diagonal_detunings() {
        let ops = setup();
        let node = NodeParams { g: 0.0, detuning_cavity: 0.5, detuning_down: 2.0, ..Default::default() };
        let params = AtomCavityParams::symmetric(node);
        let h = build_h0(&ops, &params, GaussianPulse::with_width(0.0, 0.1), GaussianPulse::with_width(0.0, 0.1));
        let m = h.at(0.4);
        for i in 0..64 {
            for j in 0..64 {
                if i != j {
                    assert_eq!(m[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        // |u↓, g↑; 1, 0⟩: cavity A photon + atom A excited (+1) + atom B in g↑ (0)
        let idx = ops.space.index(Level::ExcitedDown, Level::GroundUp, 1, 0);
        assert!((m[(idx, idx)].re - (0.5 + 1.0 + 0.0)).abs() < 1e-14);
        // |g↓, g↓; 0, 0⟩: both atoms at −Δ/2
        let idx = ops.space.index(Level::GroundDown, Level::GroundDown, 0, 0);
        assert!((m[(idx, idx)].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn coupling_matrix_element_is_minus_g() {
        let ops = setup();
        let params = AtomCavityParams {
            node_a: NodeParams { g: 3.7, ..Default::default() },
            node_b: NodeParams::default(),
        };
        let h = build_h0(&ops, &params, GaussianPulse::with_width(0.0, 0.1), GaussianPulse::with_width(0.0, 0.1));
        let m = h.at(0.0);
        let bra = ops.space.index(Level::ExcitedDown, Level::GroundDown, 0, 0);
        let ket = ops.space.index(Level::GroundDown, Level::GroundDown, 1, 0);
        assert!((m[(bra, ket)] - C64::new(-3.7, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn sixteen_channels_with_two_detectors() {
        let ops = setup();
        let ch = collapse_channels(&ops, &AtomCavityParams::default());
        assert_eq!(ch.len(), 16);
        assert_eq!(ch.iter().filter(|c| c.channel.is_detector()).count(), 2);
        let ideal = collapse_channels(&ops, &AtomCavityParams::ideal());
        let live: Vec<_> = ideal.iter().filter(|c| c.rate > 0.0).map(|c| c.channel).collect();
        assert!(!live.contains(&Channel::CavityLossA));
        assert!(!live.contains(&Channel::SpinFlipDownUpA));
        assert!(!live.contains(&Channel::DephasingDownB));
    }
}
