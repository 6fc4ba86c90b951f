//! Physical parameters. Units: ħ = 1, rates in units of the atom-A
//! spontaneous decay rate.

use serde::{Deserialize, Serialize};

use crate::error::{QmcsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeParams {
    /// Atom-cavity coupling `g`.
    pub g: f64,
    /// Intrinsic (undetected) cavity loss `κ`.
    pub kappa: f64,
    /// Cavity-to-detector coupling `K_det`.
    pub k_det: f64,
    /// Spontaneous decay `γ`.
    pub gamma: f64,
    /// Cyclicity `χ`; `f64::INFINITY` switches off spin-flipping decay.
    pub chi: f64,
    /// Optical dephasing `K_dep`.
    pub k_dep: f64,
    /// Cavity detuning `Δω_c`.
    pub detuning_cavity: f64,
    /// Detuning `Δω_↓` of the driven `g↓ ↔ u↓` transition.
    pub detuning_down: f64,
}

impl Default for NodeParams {
    fn default() -> Self {
        Self {
            g: 5.0,
            kappa: 0.2,
            k_det: 10.0,
            gamma: 1.0,
            chi: 100.0,
            k_dep: 0.01,
            detuning_cavity: 0.0,
            detuning_down: 0.0,
        }
    }
}

impl NodeParams {
    /// Lossless limit: no spin flips, no dephasing, no intrinsic cavity loss.
    pub fn ideal() -> Self {
        Self { chi: f64::INFINITY, k_dep: 0.0, kappa: 0.0, ..Self::default() }
    }

    pub fn spin_flip_rate(&self) -> f64 {
        if self.chi.is_infinite() {
            0.0
        } else {
            self.gamma / self.chi
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("k_det", self.k_det),
            ("gamma", self.gamma),
            ("k_dep", self.k_dep),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(QmcsError::InvalidParameter(format!("{name} must be a finite rate >= 0, got {v}")));
            }
        }
        if !(self.chi > 0.0) {
            return Err(QmcsError::InvalidParameter(format!("chi must be > 0, got {}", self.chi)));
        }
        if !self.detuning_cavity.is_finite() || !self.detuning_down.is_finite() {
            return Err(QmcsError::InvalidParameter("detunings must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AtomCavityParams {
    pub node_a: NodeParams,
    pub node_b: NodeParams,
}

impl AtomCavityParams {
    pub fn symmetric(node: NodeParams) -> Self {
        Self { node_a: node, node_b: node }
    }

    pub fn ideal() -> Self {
        Self::symmetric(NodeParams::ideal())
    }

    pub fn validate(&self) -> Result<()> {
        self.node_a.validate()?;
        self.node_b.validate()
    }

    /// Fastest rate in the model; the integrator step must resolve it.
    pub fn max_rate(&self) -> f64 {
        [self.node_a, self.node_b]
            .iter()
            .flat_map(|n| {
                [n.g, n.kappa + n.k_det, n.gamma, n.k_dep, n.detuning_cavity.abs(), n.detuning_down.abs()]
            })
            .fold(0.0, f64::max)
    }
}

/// Gaussian envelope `Ω(t) = Ω₀ exp(−(t − t₀)² / 2τ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianPulse {
    /// A pulse centred four widths after `t = 0`.
    pub fn with_width(amplitude: f64, width: f64) -> Self {
        Self { amplitude, center: 4.0 * width, width }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.amplitude * (-0.5 * x * x).exp()
    }

    /// Window `[0, 2 t₀]` outside which the envelope is negligible.
    pub fn end(&self) -> f64 {
        2.0 * self.center
    }

    /// Area of the untruncated envelope.
    pub fn area(&self) -> f64 {
        self.amplitude * self.width * (2.0 * std::f64::consts::PI).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_has_no_spin_flips() {
        let p = NodeParams::ideal();
        assert_eq!(p.spin_flip_rate(), 0.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn rejects_negative_rates() {
        let p = NodeParams { kappa: -0.1, ..NodeParams::default() };
        assert!(p.validate().is_err());
        let p = NodeParams { chi: 0.0, ..NodeParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn pulse_peaks_at_center() {
        let p = GaussianPulse::with_width(2.0, 0.1);
        assert!((p.value(0.4) - 2.0).abs() < 1e-15);
        assert!(p.value(0.0) < 1e-3);
    }
}
