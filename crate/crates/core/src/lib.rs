//! Dynamic entanglement scheduling: a discrete-time probabilistic
//! environment, rule-based and learned schedulers, and the experiment
//! harness that scores them by cluster-state quantum volume.

pub mod agents;
pub mod config;
pub mod dsu;
pub mod env;
pub mod error;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod preinfo;
pub mod rng;
pub mod schedulers;

pub use config::Config;
pub use env::{Action, EnvState, ProgressEntry, SimConfig};
pub use error::{Error, Result};
pub use preinfo::{generate_preinfo, GenParams, PreInfo};
pub use schedulers::{ActionMatrix, StrategyConfig, StrategyKind};
