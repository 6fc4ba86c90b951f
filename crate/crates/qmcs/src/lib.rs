//! Quantum-jump simulation of the Barrett-Kok heralded entanglement protocol
//! between two atom-cavity nodes.
//!
//! The crate is organised bottom-up:
//!
//! * [`space`] builds the 64-dimensional two-node Hilbert space and the
//!   atomic, cavity and detector operators embedded in it.
//! * [`hamiltonian`] assembles the driven two-node Hamiltonian, the
//!   microwave flip Hamiltonian and the collapse-operator set.
//! * [`jump`] integrates single quantum-jump trajectories against a
//!   non-Hermitian effective Hamiltonian.
//! * [`master`] integrates the Lindblad master equation densely; it is the
//!   ensemble oracle the trajectory solver is checked against.
//! * [`states`] holds the density-matrix utilities (partial trace,
//!   Uhlmann fidelity, Bell states).
//! * [`bk`] runs the two-round protocol and reduces the trajectory
//!   statistics to per-branch fidelities, rates and a scalar cost.

pub mod benchmarks;
pub mod bk;
pub mod error;
pub mod hamiltonian;
pub mod integrate;
pub mod jump;
pub mod linalg;
pub mod master;
pub mod params;
pub mod pulse;
pub mod rng;
pub mod space;
pub mod sparse;
pub mod states;

pub use bk::{bk_cost, run_bk, BkConfig, BkResult, Branch};
pub use error::QmcsError;
pub use params::{AtomCavityParams, GaussianPulse, NodeParams};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;
