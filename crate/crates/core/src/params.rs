//! Physical constants, unit conversions and validated model parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact in the revised SI).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Constants for the cesium D2 line used throughout the bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CesiumDefaults {
    /// Decay rate of the 6²P₃/₂ level, 1/s.
    pub gamma_cs: f64,
    /// Mass of a ¹³³Cs atom, kg.
    pub mass_cs: f64,
}

impl CesiumDefaults {
    pub const GAMMA: f64 = 33.3e6;
    pub const MASS: f64 = 132.905_451_933 * ATOMIC_MASS_UNIT;

    pub const fn new() -> Self {
        Self {
            gamma_cs: Self::GAMMA,
            mass_cs: Self::MASS,
        }
    }
}

impl Default for CesiumDefaults {
    fn default() -> Self {
        Self::new()
    }
}

/// Lab-unit conversions used at the scenario boundary.
pub mod units {
    pub const CM_PER_S: f64 = 1e-2;
    pub const MICROMETRE: f64 = 1e-6;
    pub const MICROSECOND: f64 = 1e-6;
}

/// Decay rate, Rabi frequency, mass and ħ of the atom–laser system.
///
/// Immutable once constructed; every constructor validates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Einstein coefficient γ of the excited level, 1/s.
    pub gamma: f64,
    /// Rabi frequency Ω, rad/s.
    pub omega: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// ħ in J·s. Fixed to [`HBAR`] except in unit-scaling tests.
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(gamma: f64, omega: f64, mass: f64) -> Result<Self> {
        Self::with_hbar(gamma, omega, mass, HBAR)
    }

    pub fn with_hbar(gamma: f64, omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::validation("gamma", format!("must be positive, got {gamma}")));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::validation("omega", format!("must be non-negative, got {omega}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::validation("mass", format!("must be positive, got {mass}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::validation("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self {
            gamma,
            omega,
            mass,
            hbar,
        })
    }

    /// Cesium with `Ω = ratio·γ_Cs`.
    pub fn cesium(omega_over_gamma: f64) -> Result<Self> {
        Self::new(
            CesiumDefaults::GAMMA,
            omega_over_gamma * CesiumDefaults::GAMMA,
            CesiumDefaults::MASS,
        )
    }

    /// Same system with γ and Ω multiplied by the given factors.
    pub fn scaled(&self, gamma_factor: f64, omega_factor: f64) -> Result<Self> {
        Self::with_hbar(
            self.gamma * gamma_factor,
            self.omega * omega_factor,
            self.mass,
            self.hbar,
        )
    }

    pub fn omega_over_gamma(&self) -> f64 {
        self.omega / self.gamma
    }

    /// `1 − 4Ω²/γ²`.
    pub fn alpha_sq(&self) -> f64 {
        let w = self.omega_over_gamma();
        1.0 - 4.0 * w * w
    }

    /// `α = √(1 − 4Ω²/γ²)`, principal branch; purely imaginary for Ω > γ/2.
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_sq(), 0.0).sqrt()
    }

    /// Natural wavenumber unit `√(mγ/ħ)`, 1/m.
    pub fn wavenumber_scale(&self) -> f64 {
        (self.mass * self.gamma / self.hbar).sqrt()
    }

    /// Absorption strength `V₀ = ħΩ²/2γ` of the limiting complex potential, J.
    pub fn complex_potential_strength(&self) -> f64 {
        self.hbar * self.omega * self.omega / (2.0 * self.gamma)
    }

    pub fn velocity_to_wavenumber(&self, v: f64) -> f64 {
        self.mass * v / self.hbar
    }

    pub fn wavenumber_to_velocity(&self, k: f64) -> f64 {
        self.hbar * k / self.mass
    }

    /// Free dispersion `ħk²/2m` as an angular frequency, rad/s.
    pub fn free_frequency(&self, k: f64) -> f64 {
        self.hbar * k * k / (2.0 * self.mass)
    }
}

/// Parameter block of a scenario file before validation.
///
/// `gamma`/`omega` are SI; `gamma_over_cs` and `omega_over_gamma` are the
/// lab-convenient alternatives. With `preset = "cesium"` the decay rate and
/// mass default to the cesium values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub preset: Option<String>,
    pub gamma: Option<f64>,
    pub gamma_over_cs: Option<f64>,
    pub omega: Option<f64>,
    pub omega_over_gamma: Option<f64>,
    pub mass: Option<f64>,
}

/// Resolve a raw parameter block into SI [`PhysicalParams`].
pub fn validate(raw: &RawParams) -> Result<PhysicalParams> {
    let cesium = match raw.preset.as_deref() {
        None => false,
        Some("cesium") => true,
        Some(other) => {
            return Err(Error::validation("preset", format!("unknown preset `{other}`")));
        }
    };

    let gamma = match (raw.gamma, raw.gamma_over_cs) {
        (Some(_), Some(_)) => {
            return Err(Error::validation("gamma", "give either gamma or gamma_over_cs, not both"));
        }
        (Some(g), None) => g,
        (None, Some(r)) => r * CesiumDefaults::GAMMA,
        (None, None) if cesium => CesiumDefaults::GAMMA,
        (None, None) => return Err(Error::validation("gamma", "missing")),
    };
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::validation("gamma", format!("must be positive, got {gamma}")));
    }

    let omega = match (raw.omega, raw.omega_over_gamma) {
        (Some(_), Some(_)) => {
            return Err(Error::validation("omega", "give either omega or omega_over_gamma, not both"));
        }
        (Some(o), None) => o,
        (None, Some(r)) => r * gamma,
        (None, None) => return Err(Error::validation("omega", "missing")),
    };

    let mass = match raw.mass {
        Some(m) => m,
        None if cesium => CesiumDefaults::MASS,
        None => return Err(Error::validation("mass", "missing")),
    };

    PhysicalParams::new(gamma, omega, mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cesium_preset_with_ratio() {
        let raw = RawParams {
            preset: Some("cesium".into()),
            omega_over_gamma: Some(0.66),
            ..Default::default()
        };
        let p = validate(&raw).unwrap();
        assert_eq!(p.gamma, 33.3e6);
        assert!((p.omega - 2.1978e7).abs() < 1e-3);
        assert_eq!(p.mass, CesiumDefaults::MASS);
        assert_eq!(CesiumDefaults::default().gamma_cs, 33.3e6);
    }

    #[test]
    fn scaled_units_laser_off() {
        let raw = RawParams {
            gamma: Some(1.0),
            omega: Some(0.0),
            mass: Some(1.0),
            ..Default::default()
        };
        let p = validate(&raw).unwrap();
        assert_eq!(p.omega, 0.0);
        assert_eq!(p.alpha(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_bad_values() {
        let raw = RawParams {
            gamma: Some(-1.0),
            omega: Some(0.0),
            mass: Some(1.0),
            ..Default::default()
        };
        match validate(&raw) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "gamma"),
            other => panic!("expected gamma error, got {other:?}"),
        }
        assert!(matches!(
            PhysicalParams::new(1.0, -0.5, 1.0),
            Err(Error::Validation { ref field, .. }) if field == "omega"
        ));
        assert!(matches!(
            PhysicalParams::new(1.0, 0.5, 0.0),
            Err(Error::Validation { ref field, .. }) if field == "mass"
        ));
        let raw = RawParams {
            preset: Some("rubidium".into()),
            omega: Some(1.0),
            ..Default::default()
        };
        assert!(validate(&raw).is_err());
    }

    #[test]
    fn alpha_identity_both_branches() {
        for &w in &[0.0, 0.1, 0.33, 0.5, 0.66, 1.0, 500.0] {
            let p = PhysicalParams::new(3.0, 3.0 * w, 1.0).unwrap();
            let a = p.alpha();
            let lhs = a * a + 4.0 * w * w;
            assert!((lhs - 1.0).norm() < 1e-12 * (1.0 + 4.0 * w * w), "w={w}");
        }
        assert!(PhysicalParams::cesium(0.66).unwrap().alpha().re.abs() < 1e-15);
    }

    #[test]
    fn velocity_round_trip() {
        let p = PhysicalParams::cesium(0.33).unwrap();
        for &v_cm in &[0.1, 0.9, 2.0, 5.42, 18.96, 1234.5] {
            let v = v_cm * units::CM_PER_S;
            let back = p.wavenumber_to_velocity(p.velocity_to_wavenumber(v)) / units::CM_PER_S;
            assert!(((back - v_cm) / v_cm).abs() < 1e-12);
        }
    }
}
