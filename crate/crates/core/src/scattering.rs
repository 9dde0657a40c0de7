//! Stationary scattering states of the laser step and of the complex potential.
//!
//! Two-channel coefficients are evaluated in natural units (wavenumbers in
//! `√(mγ/ħ)`, rates in `γ`) where the common denominator stays well scaled,
//! and converted back to SI at the interface.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::branch::sqrt_upper;
use crate::cpot::CpotParams;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative size of the common denominator below which the two eigen-channels
/// are considered coincident.
const DEGENERACY_TOL: f64 = 1e-12;

/// Eigenvalues and eigenvectors of `½((0, Ω), (Ω, −iγ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigensystem {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub vec_plus: [Complex64; 2],
    pub vec_minus: [Complex64; 2],
}

/// Eigenvalues in units of γ, computed without cancellation for small Ω/γ.
fn scaled_eigenvalues(w: f64) -> (Complex64, Complex64, Complex64) {
    let alpha = Complex64::new(1.0 - 4.0 * w * w, 0.0).sqrt();
    // λ₊/γ = i(α − 1)/4 = −i w²/(1 + α)
    let lp = -I * (w * w) / (1.0 + alpha);
    let lm = -I * (1.0 + alpha) / 4.0;
    (lp, lm, alpha)
}

pub fn eigensystem(params: &PhysicalParams) -> Eigensystem {
    let w = params.omega_over_gamma();
    let (lp, lm, alpha) = scaled_eigenvalues(w);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (vec_plus, vec_minus) = if params.omega == 0.0 {
        // Decoupled channels: ground state (λ₊ = 0) and excited state (λ₋ = −iγ/2).
        ([one, zero], [zero, one])
    } else {
        // 2λ₊/Ω = −2iw/(1+α), 2λ₋/Ω = −i(1+α)/(2w)
        (
            [one, -2.0 * I * w / (1.0 + alpha)],
            [one, -I * (1.0 + alpha) / (2.0 * w)],
        )
    };
    Eigensystem {
        lambda_plus: lp * params.gamma,
        lambda_minus: lm * params.gamma,
        vec_plus,
        vec_minus,
    }
}

/// Matching coefficients of the two-channel stationary state `Φ_k`.
///
/// `b_plus`/`b_minus` are the excited-state amplitudes `C±·2λ±/Ω` of the two
/// transmitted modes, evaluated in a form that stays finite at Ω = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoChannelCoefficients {
    /// Incident wavenumber, 1/m.
    pub k: f64,
    pub q: Complex64,
    pub k_plus: Complex64,
    pub k_minus: Complex64,
    /// Eigenvalues λ±, 1/s.
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub r1: Complex64,
    pub r2: Complex64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
    /// Common denominator in natural units (`γ·mγ/ħ`).
    pub d: Complex64,
    /// Whether the laser couples the channels at all.
    pub coupled: bool,
}

pub fn two_channel_coefficients(params: &PhysicalParams, k: f64) -> Result<TwoChannelCoefficients> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!(
            "incident wavenumber must be positive, got {k}"
        )));
    }
    let ks = params.wavenumber_scale();
    let kh = k / ks;
    let w = params.omega_over_gamma();
    let (lp, lm, _) = scaled_eigenvalues(w);

    let kc = Complex64::new(kh, 0.0);
    let k2 = Complex64::new(kh * kh, 0.0);
    let q = sqrt_upper(k2 + I);
    let kp = sqrt_upper(k2 - 2.0 * lp);
    let km = sqrt_upper(k2 - 2.0 * lm);

    let t1 = lp * (q + kp) * (kc + km);
    let t2 = lm * (q + km) * (kc + kp);
    let d = t1 - t2;
    if d.norm() <= DEGENERACY_TOL * t1.norm().max(t2.norm()) || d.norm() < f64::MIN_POSITIVE {
        return Err(Error::Degenerate(format!(
            "common denominator vanishes at Ω/γ = {w} (coincident eigen-channels, Ω = γ/2)"
        )));
    }

    let r1 = (lp * (q + kp) * (kc - km) - lm * (q + km) * (kc - kp)) / d;
    let r2 = kc * (km - kp) * w / d;
    let c_plus = -2.0 * kc * (q + km) * lm / d;
    let c_minus = 2.0 * kc * (q + kp) * lp / d;
    // C±·2λ±/Ω with λ₊λ₋ = −w²/4 substituted.
    let b_plus = kc * (q + km) * w / d;
    let b_minus = -kc * (q + kp) * w / d;

    Ok(TwoChannelCoefficients {
        k,
        q: q * ks,
        k_plus: kp * ks,
        k_minus: km * ks,
        lambda_plus: lp * params.gamma,
        lambda_minus: lm * params.gamma,
        r1,
        r2,
        c_plus,
        c_minus,
        b_plus,
        b_minus,
        d,
        coupled: params.omega > 0.0,
    })
}

/// Which side of the laser edge a one-sided limit is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl TwoChannelCoefficients {
    /// Probability that an incident atom with this wavenumber is eventually
    /// detected: `1 − |R₁|²` with the laser on, zero with it off (the
    /// transmitted ground-state wave then never decays).
    pub fn detection_probability(&self) -> f64 {
        if self.coupled {
            1.0 - self.r1.norm_sqr()
        } else {
            0.0
        }
    }

    /// Spinor value and x-derivative, evaluated with the formula of one side.
    pub fn one_sided(&self, x: f64, side: Side) -> ([Complex64; 2], [Complex64; 2]) {
        let norm = 1.0 / (2.0 * PI).sqrt();
        let k = self.k;
        match side {
            Side::Left => {
                let ein = (I * k * x).exp();
                let eref = (-I * k * x).exp();
                let eq = (-I * self.q * x).exp();
                let v1 = ein + self.r1 * eref;
                let d1 = I * k * ein - I * k * self.r1 * eref;
                let v2 = self.r2 * eq;
                let d2 = -I * self.q * self.r2 * eq;
                ([v1 * norm, v2 * norm], [d1 * norm, d2 * norm])
            }
            Side::Right => {
                let ep = (I * self.k_plus * x).exp();
                let em = (I * self.k_minus * x).exp();
                let v1 = self.c_plus * ep + self.c_minus * em;
                let d1 = I * self.k_plus * self.c_plus * ep + I * self.k_minus * self.c_minus * em;
                let v2 = self.b_plus * ep + self.b_minus * em;
                let d2 = I * self.k_plus * self.b_plus * ep + I * self.k_minus * self.b_minus * em;
                ([v1 * norm, v2 * norm], [d1 * norm, d2 * norm])
            }
        }
    }

    /// Largest relative mismatch of value and derivative of both components at x = 0.
    pub fn matching_residual(&self) -> f64 {
        let (vl, dl) = self.one_sided(0.0, Side::Left);
        let (vr, dr) = self.one_sided(0.0, Side::Right);
        let vscale = 1.0 / (2.0 * PI).sqrt();
        let dscale = vscale * self.k.max(self.q.norm()).max(self.k_plus.norm()).max(self.k_minus.norm());
        let mut worst: f64 = 0.0;
        for c in 0..2 {
            worst = worst.max((vl[c] - vr[c]).norm() / vscale);
            worst = worst.max((dl[c] - dr[c]).norm() / dscale);
        }
        worst
    }
}

/// Stationary two-component state `Φ_k(x)` including the `1/√(2π)` prefactor.
pub fn stationary_state(coeffs: &TwoChannelCoefficients, x: f64) -> [Complex64; 2] {
    let side = if x <= 0.0 { Side::Left } else { Side::Right };
    coeffs.one_sided(x, side).0
}

/// Reflection and transmission by the absorbing step `−iV₀Θ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneChannelCoefficients {
    pub k: f64,
    pub kappa: Complex64,
    pub r: Complex64,
    pub t: Complex64,
    /// Absorption strength V₀, J.
    pub v0: f64,
}

pub fn one_channel_coefficients(cp: &CpotParams, k: f64) -> Result<OneChannelCoefficients> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!(
            "incident wavenumber must be positive, got {k}"
        )));
    }
    let absorb = 2.0 * cp.mass * cp.v0 / (cp.hbar * cp.hbar);
    let kappa = sqrt_upper(Complex64::new(k * k, absorb));
    let r = (k - kappa) / (k + kappa);
    let t = 2.0 * k / (k + kappa);
    Ok(OneChannelCoefficients {
        k,
        kappa,
        r,
        t,
        v0: cp.v0,
    })
}

impl OneChannelCoefficients {
    pub fn detection_probability(&self) -> f64 {
        if self.v0 > 0.0 {
            1.0 - self.r.norm_sqr()
        } else {
            0.0
        }
    }

    /// `φ_k(x)` including the `1/√(2π)` prefactor.
    pub fn value(&self, x: f64) -> Complex64 {
        let norm = 1.0 / (2.0 * PI).sqrt();
        if x <= 0.0 {
            ((I * self.k * x).exp() + self.r * (-I * self.k * x).exp()) * norm
        } else {
            self.t * (I * self.kappa * x).exp() * norm
        }
    }
}

/// Anything that reflects part of an incident wave.
pub trait Reflection {
    fn wavenumber(&self) -> f64;
    fn reflection(&self) -> Complex64;
    fn detection_probability(&self) -> f64;
}

impl Reflection for TwoChannelCoefficients {
    fn wavenumber(&self) -> f64 {
        self.k
    }
    fn reflection(&self) -> Complex64 {
        self.r1
    }
    fn detection_probability(&self) -> f64 {
        TwoChannelCoefficients::detection_probability(self)
    }
}

impl Reflection for OneChannelCoefficients {
    fn wavenumber(&self) -> f64 {
        self.k
    }
    fn reflection(&self) -> Complex64 {
        self.r
    }
    fn detection_probability(&self) -> f64 {
        OneChannelCoefficients::detection_probability(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CesiumDefaults;

    fn scaled(w: f64) -> PhysicalParams {
        PhysicalParams::with_hbar(1.0, w, 1.0, 1.0).unwrap()
    }

    #[test]
    fn eigen_special_points() {
        let e = eigensystem(&scaled(0.0));
        assert_eq!(e.lambda_plus, Complex64::new(0.0, 0.0));
        assert!((e.lambda_minus - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        let e = eigensystem(&scaled(0.5));
        assert!((e.lambda_plus - Complex64::new(0.0, -0.25)).norm() < 1e-15);
        assert!((e.lambda_minus - Complex64::new(0.0, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn eigen_residual() {
        for &w in &[0.05, 0.33, 0.45, 0.66, 1.0, 500.0] {
            let p = PhysicalParams::new(CesiumDefaults::GAMMA, w * CesiumDefaults::GAMMA, CesiumDefaults::MASS).unwrap();
            let e = eigensystem(&p);
            let m = [
                [Complex64::new(0.0, 0.0), Complex64::new(0.5 * p.omega, 0.0)],
                [Complex64::new(0.5 * p.omega, 0.0), Complex64::new(0.0, -0.5 * p.gamma)],
            ];
            for (lam, v) in [(e.lambda_plus, e.vec_plus), (e.lambda_minus, e.vec_minus)] {
                let r0 = m[0][0] * v[0] + m[0][1] * v[1] - lam * v[0];
                let r1 = m[1][0] * v[0] + m[1][1] * v[1] - lam * v[1];
                let vn = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                assert!((r0.norm_sqr() + r1.norm_sqr()).sqrt() / vn < 1e-12 * p.gamma, "w={w}");
            }
        }
    }

    #[test]
    fn laser_off_full_transmission() {
        let c = two_channel_coefficients(&scaled(0.0), 0.3).unwrap();
        assert_eq!(c.r1.norm(), 0.0);
        assert_eq!(c.r2.norm(), 0.0);
        assert!((c.c_plus - 1.0).norm() < 1e-15);
        assert_eq!(c.detection_probability(), 0.0);
    }

    #[test]
    fn zero_energy_total_reflection() {
        let c = two_channel_coefficients(&scaled(0.33), 1e-9).unwrap();
        assert!((c.r1 + 1.0).norm() < 1e-7);
    }

    #[test]
    fn rejects_nonpositive_k_and_degenerate_point() {
        assert!(matches!(two_channel_coefficients(&scaled(0.3), 0.0), Err(Error::Domain(_))));
        assert!(matches!(two_channel_coefficients(&scaled(0.3), -1.0), Err(Error::Domain(_))));
        assert!(matches!(two_channel_coefficients(&scaled(0.5), 0.2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn continuity_and_decay() {
        let p = PhysicalParams::cesium(0.66).unwrap();
        let c = two_channel_coefficients(&p, p.velocity_to_wavenumber(0.02)).unwrap();
        assert!(c.matching_residual() < 1e-12);
        let far = stationary_state(&c, 50.0 / c.k_plus.im.min(c.k_minus.im));
        assert!(far[0].norm() < 1e-20 && far[1].norm() < 1e-20);
        assert!(c.q.im > 0.0 && c.k_plus.im > 0.0 && c.k_minus.im > 0.0);
        assert!(c.r1.norm() < 1.0);
    }

    #[test]
    fn free_particle_complex_potential() {
        let cp = CpotParams::new(0.0, 1.0, 1.0).unwrap();
        let c = one_channel_coefficients(&cp, 0.7).unwrap();
        assert_eq!(c.r.norm(), 0.0);
        assert!((c.t - 1.0).norm() < 1e-15);
        assert!((c.kappa - 0.7).norm() < 1e-15);
        let cp = CpotParams::new(2.0, 1.0, 1.0).unwrap();
        let c = one_channel_coefficients(&cp, 1e-10).unwrap();
        assert!((c.r + 1.0).norm() < 1e-9);
        assert!(c.t.norm() < 1e-9);
        assert!((1.0 + c.r - c.t).norm() < 1e-15);
    }
}
