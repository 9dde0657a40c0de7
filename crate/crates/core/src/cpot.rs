//! One-channel model with the absorbing step `−iV₀Θ(x)`.
//!
//! The absorption rate `2V₀/ħ` times the norm inside the absorber plays the
//! role of the fluorescence rate. With `V₀ = ħΩ²/2γ` this is the limit of
//! the laser model for large γ and Ω at fixed `Ω²/γ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{evaluate, Distribution, DistributionSeries, OverlapKernel, TimeGrid};
use crate::packets::MomentumAmplitude;
use crate::params::PhysicalParams;
use crate::scattering::one_channel_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpotParams {
    /// Absorption strength V₀, J.
    pub v0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl CpotParams {
    pub fn new(v0: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::validation("v0", format!("must be non-negative, got {v0}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::validation("mass", format!("must be positive, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::validation("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self { v0, mass, hbar })
    }

    /// `V₀ = ħΩ²/2γ`.
    pub fn from_physical(params: &PhysicalParams) -> Result<Self> {
        Self::new(params.complex_potential_strength(), params.mass, params.hbar)
    }

    /// Same system with V₀ multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.v0 * factor, self.mass, self.hbar)
    }

    /// `2V₀/ħ`, 1/s.
    pub fn absorption_rate(&self) -> f64 {
        2.0 * self.v0 / self.hbar
    }
}

/// Absorption-rate distribution `Π(t) = (2V₀/ħ)∫₀^∞|ψ(x,t)|² dx`.
pub fn cpot_pi_series(amp: &MomentumAmplitude, cp: &CpotParams, grid: &TimeGrid) -> Result<DistributionSeries> {
    let kernel = OverlapKernel::one_channel(cp, &amp.grid)?;
    evaluate(amp, Some(&kernel), grid, &[Distribution::Pi])
}

/// Operator-normalized absorption distribution.
pub fn cpot_pi_on_series(amp: &MomentumAmplitude, cp: &CpotParams, grid: &TimeGrid) -> Result<DistributionSeries> {
    let kernel = OverlapKernel::one_channel(cp, &amp.grid)?;
    evaluate(amp, Some(&kernel), grid, &[Distribution::PiOn])
}

/// Spectral solution `ψ(x, t) = Σ_j w_j ψ̃_j φ_{k_j}(x) e^{-iω_j t}` of the
/// one-channel equation.
pub fn cpot_wavefunction(amp: &MomentumAmplitude, cp: &CpotParams, x: f64, t: f64) -> Result<Complex64> {
    let c = cp.hbar / (2.0 * cp.mass);
    let mut sum = Complex64::new(0.0, 0.0);
    for ((&k, &w), &v) in amp.grid.nodes.iter().zip(&amp.grid.weights).zip(&amp.values) {
        let coeffs = one_channel_coefficients(cp, k)?;
        sum += v * w * coeffs.value(x) * Complex64::from_polar(1.0, -c * k * k * t);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packets::{build_amplitude, GaussianComponent, GridPolicy, PacketSpec, Width};
    use crate::params::units::CM_PER_S;

    #[test]
    fn validation_and_scaling() {
        let p = PhysicalParams::cesium(0.33).unwrap();
        let cp = CpotParams::from_physical(&p).unwrap();
        let expected = p.hbar * p.omega * p.omega / (2.0 * p.gamma);
        assert!((cp.v0 - expected).abs() < 1e-15 * expected);
        assert!((cp.absorption_rate() - p.omega * p.omega / p.gamma).abs() < 1e-6);
        assert!(CpotParams::new(-1.0, 1.0, 1.0).is_err());
        assert_eq!(cp.scaled(10.0).unwrap().v0, 10.0 * cp.v0);
    }

    #[test]
    fn zero_strength_gives_nothing() {
        let p = PhysicalParams::cesium(0.33).unwrap();
        let c = GaussianComponent::new(Complex64::new(1.0, 0.0), 2.0 * CM_PER_S, Width::Velocity(0.48 * CM_PER_S), 0.0, 0.0);
        let amp = build_amplitude(&PacketSpec::single(c).unwrap(), &p, &GridPolicy::with_nodes(64)).unwrap();
        let cp = CpotParams::new(0.0, p.mass, p.hbar).unwrap();
        let g = TimeGrid::new(-1e-5, 1e-5, 5).unwrap();
        let s = cpot_pi_series(&amp, &cp, &g).unwrap();
        assert!(s.get(Distribution::Pi).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(cpot_pi_on_series(&amp, &cp, &g), Err(Error::SingularReweighting { .. })));
    }
}
