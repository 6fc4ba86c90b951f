//! π-pulse calibration on an isolated two-level transition.

use crate::error::{QmcsError, Result};
use crate::integrate::Rk4;
use crate::params::GaussianPulse;
use crate::C64;

/// Required population transfer of a calibrated loss-free π pulse.
pub const PI_PULSE_TRANSFER: f64 = 1.0 - 1e-4;

const STEPS: usize = 4000;

/// The two-level system a pulse is calibrated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelTarget {
    /// Detuning `Δ` entering as `(Δ/2) σ_z`.
    pub detuning: f64,
    /// Decay of the upper level, only used when not loss-free.
    pub decay: f64,
}

impl TwoLevelTarget {
    pub fn resonant() -> Self {
        Self { detuning: 0.0, decay: 0.0 }
    }
}

/// Amplitudes `(c_g, c_e)` after driving `|g⟩` with `pulse`.
pub fn drive_two_level(pulse: &GaussianPulse, target: TwoLevelTarget, loss_free: bool) -> (C64, C64) {
    let half_det = 0.5 * target.detuning;
    let loss = if loss_free { 0.0 } else { 0.5 * target.decay };
    let mut f = |t: f64, y: &[C64], dy: &mut [C64]| {
        let w = pulse.value(t);
        // −i H_eff ψ with H_eff = Ω σ_x + (Δ/2) σ_z − i(γ/2)|e⟩⟨e|
        dy[0] = C64::new(0.0, -1.0) * (C64::new(-half_det, 0.0) * y[0] + C64::new(w, 0.0) * y[1]);
        dy[1] = C64::new(0.0, -1.0) * (C64::new(w, 0.0) * y[0] + C64::new(half_det, -loss) * y[1]);
    };
    let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut rk = Rk4::new(2);
    let h = pulse.end() / STEPS as f64;
    for k in 0..STEPS {
        rk.step(&mut f, k as f64 * h, &mut y, h);
    }
    (y[0], y[1])
}

/// Find the Gaussian amplitude that inverts the target transition for a
/// pulse of the given width, by bisection on `Re c_g(Ω₀) = 0` between zero
/// and a 2π-area pulse.
pub fn calibrate_pi_pulse(width: f64, target: TwoLevelTarget, loss_free: bool) -> Result<GaussianPulse> {
    if !(width > 0.0) {
        return Err(QmcsError::Calibration(format!("pulse width must be positive, got {width}")));
    }
    let unit_area = width * (2.0 * std::f64::consts::PI).sqrt();
    let residual = |amp: f64| drive_two_level(&GaussianPulse::with_width(amp, width), target, loss_free).0.re;
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI / unit_area);
    let (f_lo, f_hi) = (residual(lo), residual(hi));
    if f_lo.signum() == f_hi.signum() {
        return Err(QmcsError::Calibration(format!(
            "no sign change of Re c_g in [0, {hi:.4}] ({f_lo:.3e}, {f_hi:.3e})"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if residual(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let pulse = GaussianPulse::with_width(0.5 * (lo + hi), width);
    if loss_free {
        let transfer = drive_two_level(&pulse, target, true).1.norm_sqr();
        if transfer < PI_PULSE_TRANSFER {
            return Err(QmcsError::Calibration(format!("transfer {transfer:.6} below {PI_PULSE_TRANSFER}")));
        }
    }
    Ok(pulse)
}
