use thiserror::Error;

#[derive(Debug, Error)]
pub enum QmcsError {
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("trace drifted by {drift:e} at t = {time}; reduce the step size")]
    TraceDrift { time: f64, drift: f64 },

    #[error("pulse calibration failed: {0}")]
    Calibration(String),

    #[error("no heralded trajectories in any branch after {n_traj} first-round trajectories")]
    Degenerate { n_traj: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
}

pub type Result<T> = std::result::Result<T, QmcsError>;
