//! Limiting regimes of the laser model.
//!
//! * Large γ at fixed `Ω/γ`: reflection approaches total, with a `γ^{-1/2}`
//!   correction governed by the constants `C₁, C₂, C₃` of `α = √(1 − 4Ω²/γ²)`.
//! * Large Ω at fixed γ: `Π^ON` tends to a Kijowski-like form carrying the
//!   delay factor `γ/(γ + iħ(k² − k′²)/m)`.
//!
//! Regime checks are advisory: the convergence report records warnings but
//! always evaluates the requested points.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::branch::sqrt_upper;
use crate::cpot::CpotParams;
use crate::error::{Error, Result};
use crate::kernels::{
    evaluate, pivoted_cholesky, quadratic_form_series, Distribution, DistributionSeries, HermitianKernel,
    OverlapKernel, TimeGrid, FACTOR_TOLERANCE,
};
use crate::packets::MomentumAmplitude;
use crate::params::PhysicalParams;
use crate::quadrature::trapezoid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixConstants {
    pub alpha: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub c3: Complex64,
}

/// Closed-form `C₁(α), C₂(α), C₃(α)`, principal roots throughout.
pub fn appendix_constants(alpha: Complex64) -> Result<AppendixConstants> {
    let one = Complex64::new(1.0, 0.0);
    let near = |z: Complex64| z.norm() < 1e-12;
    if near(alpha) {
        return Err(Error::Domain("appendix constants are singular at α = 0 (Ω = γ/2)".into()));
    }
    if near(alpha - one) {
        return Err(Error::Domain("appendix constants are singular at α = 1 (Ω = 0)".into()));
    }
    if near(alpha + one) {
        return Err(Error::Domain("appendix constants are singular at α = −1".into()));
    }
    let s2 = Complex64::new(SQRT_2, 0.0);
    let sp = (one + alpha).sqrt();
    let sm = (one - alpha).sqrt();
    let c1 = (2.0 * s2 * alpha + (one + alpha).powf(1.5) - (one - alpha).powf(1.5))
        / (s2 * alpha * (one - alpha * alpha).sqrt() + sp * (alpha - one) + sm * (one + alpha));
    let den = sp * (s2 + sm) * (alpha - one) + sm * (s2 + sp) * (alpha + one);
    let c2 = 2.0 * s2 * (one - alpha * alpha).sqrt() * (sp - sm) / den;
    let c3 = 0.5 * den;
    Ok(AppendixConstants { alpha, c1, c2, c3 })
}

/// Leading-order approximations to the scattering data of one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCoefficients {
    pub k: f64,
    pub q: Complex64,
    pub k_plus: Complex64,
    pub k_minus: Complex64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub r1: Complex64,
    pub r2: Complex64,
}

/// Large-γ form at fixed `Ω/γ`.
pub fn large_gamma_coeffs(params: &PhysicalParams, k: f64) -> Result<AsymptoticCoefficients> {
    let alpha = params.alpha();
    let c = appendix_constants(alpha)?;
    let ks = params.wavenumber_scale();
    let kh = k / ks;
    let si = I.sqrt();
    let one = Complex64::new(1.0, 0.0);
    Ok(AsymptoticCoefficients {
        k,
        q: si * ks,
        k_plus: sqrt_upper(I * (one - alpha) / 2.0) * ks,
        k_minus: sqrt_upper(I * (one + alpha) / 2.0) * ks,
        lambda_plus: I * params.gamma / 4.0 * (alpha - one),
        lambda_minus: -I * params.gamma / 4.0 * (alpha + one),
        r1: -one - 2.0 * I * si * kh * c.c1,
        r2: -si * kh * c.c2,
    })
}

/// Large-Ω form at fixed γ.
pub fn large_omega_coeffs(params: &PhysicalParams, k: f64) -> Result<AsymptoticCoefficients> {
    if params.omega <= 0.0 {
        return Err(Error::Domain("large-Ω asymptotics need Ω > 0".into()));
    }
    let (m, hb, g, om) = (params.mass, params.hbar, params.gamma, params.omega);
    let b = Complex64::new(k * k, m * g / (2.0 * hb));
    let branch = |sign: f64| {
        let r = sqrt_upper(Complex64::new(sign * m * om / hb, 0.0));
        r + b / (2.0 * r)
    };
    let eps = k * (hb / (m * om)).sqrt();
    Ok(AsymptoticCoefficients {
        k,
        q: sqrt_upper(Complex64::new(k * k, m * g / hb)),
        k_plus: branch(1.0),
        k_minus: branch(-1.0),
        lambda_plus: Complex64::new(-om / 2.0, -g / 4.0),
        lambda_minus: Complex64::new(om / 2.0, -g / 4.0),
        r1: Complex64::new(-1.0 + eps, -eps),
        r2: Complex64::new(-eps, -eps),
    })
}

/// `(1 − |R₁(k)|²)^{-1/2}(1 − |R₁(k′)|²)^{-1/2}` to leading order in γ.
pub fn large_gamma_reweight_product(params: &PhysicalParams, k: f64, k_prime: f64) -> Result<Complex64> {
    let c = appendix_constants(params.alpha())?;
    let ks = params.wavenumber_scale();
    Ok(SQRT_2 / (4.0 * c.c1) / ((k / ks) * (k_prime / ks)).sqrt())
}

/// The same product to leading order in Ω.
pub fn large_omega_reweight_product(params: &PhysicalParams, k: f64, k_prime: f64) -> f64 {
    0.5 * (params.mass * params.omega / (params.hbar * k * k_prime)).sqrt()
}

/// `x`-integral of the large-γ detection kernel times the large-γ
/// reweighting, with the common `ħ√(kk′)/2πm` stripped. Equals one when the
/// limit reproduces Kijowski's normalization.
pub fn large_gamma_closure(alpha: Complex64) -> Result<Complex64> {
    let c = appendix_constants(alpha)?;
    let one = Complex64::new(1.0, 0.0);
    let w_sq = (one - alpha * alpha) / 4.0;
    let q = I.sqrt();
    let kp = sqrt_upper(I * (one - alpha) / 2.0);
    let km = sqrt_upper(I * (one + alpha) / 2.0);
    let a = one + ((one + alpha) / 2.0).sqrt();
    let b = one + ((one - alpha) / 2.0).sqrt();
    let left = c.c2.norm_sqr() / (2.0 * q.im);
    let right = 16.0 / c.c3.norm_sqr()
        * w_sq
        * (a.norm_sqr() / (2.0 * kp.im) + b.norm_sqr() / (2.0 * km.im) - 2.0 * (a.conj() * b / (I * (kp.conj() - km))).re);
    Ok(SQRT_2 / (4.0 * c.c1) * (left + right))
}

/// Integrand of [`large_gamma_closure`] at scaled position `x̂ = x·√(mγ/ħ)`,
/// without the reweighting constant.
pub fn large_gamma_kernel_profile(alpha: Complex64, x: f64) -> Result<Complex64> {
    let c = appendix_constants(alpha)?;
    let one = Complex64::new(1.0, 0.0);
    let q = I.sqrt();
    if x < 0.0 {
        Ok(c.c2.norm_sqr() * (-I * (q - q.conj()) * x).exp())
    } else {
        let w_sq = (one - alpha * alpha) / 4.0;
        let kp = sqrt_upper(I * (one - alpha) / 2.0);
        let km = sqrt_upper(I * (one + alpha) / 2.0);
        let a = one + ((one + alpha) / 2.0).sqrt();
        let b = one + ((one - alpha) / 2.0).sqrt();
        let v = a * (I * kp * x).exp() - b * (I * km * x).exp();
        Ok(16.0 / c.c3.norm_sqr() * w_sq * v.norm_sqr())
    }
}

/// Strong-driving kernel `(ħ/2πm)√(k_j k_l)·γ/(γ + 2i(ω_j − ω_l))`.
#[derive(Debug, Clone)]
pub struct DelayKernel {
    nodes: Vec<f64>,
    freqs: Vec<f64>,
    gamma: f64,
    prefactor: f64,
}

impl DelayKernel {
    pub fn new(amp: &MomentumAmplitude, gamma: f64) -> Self {
        Self {
            nodes: amp.grid.nodes.clone(),
            freqs: amp.free_frequencies(),
            gamma,
            prefactor: amp.hbar / (2.0 * PI * amp.mass),
        }
    }
}

impl HermitianKernel for DelayKernel {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn entry(&self, j: usize, l: usize) -> Complex64 {
        let root = (self.nodes[j] * self.nodes[l]).sqrt();
        let d = Complex64::new(self.gamma, 2.0 * (self.freqs[j] - self.freqs[l]));
        self.prefactor * root * self.gamma / d
    }
}

/// `Π^ON` in the strong-driving limit, including the finite-γ delay.
pub fn delay_kernel_series(amp: &MomentumAmplitude, params: &PhysicalParams, grid: &TimeGrid) -> DistributionSeries {
    let kernel = DelayKernel::new(amp, params.gamma);
    let factor = pivoted_cholesky(&kernel, FACTOR_TOLERANCE);
    let values = quadratic_form_series(&factor, &amp.weighted(), &amp.free_frequencies(), grid);
    DistributionSeries::single(*grid, Distribution::PiDelay, values)
}

/// How γ and Ω move together along a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scaling {
    /// γ → sγ, Ω → sΩ.
    FixedRatio,
    /// γ → sγ, Ω → √s Ω, approaching the complex-potential model.
    FixedOmegaSqOverGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub gamma_multiplier: f64,
    /// `max|Π^ON − Π_K| / max Π_K`.
    pub sup_dist: f64,
    /// `∫|Π^ON − Π_K| dt`.
    pub l1_dist: f64,
    /// For the fixed `Ω²/γ` family: `max|Π − Π_cpot| / max Π_cpot`.
    pub model_sup_dist: Option<f64>,
    pub model_l1_dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scaling: Scaling,
    pub rows: Vec<ConvergenceRow>,
    /// Whether `l1_dist` decreases strictly along the rows.
    pub monotone: bool,
    /// Whether `model_l1_dist` decreases strictly (fixed `Ω²/γ` only).
    pub model_monotone: Option<bool>,
    pub warnings: Vec<String>,
}

/// Relative sup distance and absolute L¹ distance of two sampled curves.
pub fn distances(a: &[f64], reference: &[f64], dt: f64) -> (f64, f64) {
    let peak = reference.iter().cloned().fold(0.0, f64::max);
    let diff: Vec<f64> = a.iter().zip(reference).map(|(x, y)| (x - y).abs()).collect();
    let sup = diff.iter().cloned().fold(0.0, f64::max) / peak;
    (sup, trapezoid(&diff, dt))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Advisory check that γ dominates the kinetic frequencies of the packet.
pub fn large_gamma_warning(params: &PhysicalParams, amp: &MomentumAmplitude) -> Option<String> {
    let k_max = amp.grid.k_max();
    let kinetic = params.hbar * k_max * k_max / params.mass;
    (params.gamma < 10.0 * kinetic).then(|| {
        format!(
            "γ = {:.3e}/s is not large against ħk²/m = {:.3e}/s at the top of the packet; \
             the large-γ limit is only approached",
            params.gamma, kinetic
        )
    })
}

/// Distances between `Π^ON` and `Π_K` along a scaling family.
pub fn convergence_report(
    amp: &MomentumAmplitude,
    base: &PhysicalParams,
    grid: &TimeGrid,
    multipliers: &[f64],
    scaling: Scaling,
) -> Result<ConvergenceReport> {
    if multipliers.is_empty() {
        return Err(Error::validation("gamma_multipliers", "at least one multiplier is required"));
    }
    if let Some(bad) = multipliers.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::validation("gamma_multipliers", format!("must be positive, got {bad}")));
    }
    let kij = evaluate(amp, None, grid, &[Distribution::PiK])?;
    let pk = kij.get(Distribution::PiK).expect("requested column").to_vec();
    let cpot_pi = match scaling {
        Scaling::FixedRatio => None,
        Scaling::FixedOmegaSqOverGamma => {
            let cp = CpotParams::from_physical(base)?;
            let k = OverlapKernel::one_channel(&cp, &amp.grid)?;
            Some(evaluate(amp, Some(&k), grid, &[Distribution::Pi])?.get(Distribution::Pi).expect("requested column").to_vec())
        }
    };
    let wanted: &[Distribution] = match scaling {
        Scaling::FixedRatio => &[Distribution::PiOn],
        Scaling::FixedOmegaSqOverGamma => &[Distribution::PiOn, Distribution::Pi],
    };

    let rows: Vec<(ConvergenceRow, Option<String>)> = multipliers
        .par_iter()
        .map(|&s| {
            let omega_factor = match scaling {
                Scaling::FixedRatio => s,
                Scaling::FixedOmegaSqOverGamma => s.sqrt(),
            };
            let p = base.scaled(s, omega_factor)?;
            let kernel = OverlapKernel::two_channel(&p, &amp.grid)?;
            let series = evaluate(amp, Some(&kernel), grid, wanted)?;
            let (sup_dist, l1_dist) = distances(series.get(Distribution::PiOn).expect("requested column"), &pk, grid.step);
            let (model_sup_dist, model_l1_dist) = match &cpot_pi {
                Some(reference) => {
                    let (a, b) = distances(series.get(Distribution::Pi).expect("requested column"), reference, grid.step);
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            let warning = match scaling {
                Scaling::FixedRatio => large_gamma_warning(&p, amp),
                Scaling::FixedOmegaSqOverGamma => None,
            };
            Ok((
                ConvergenceRow {
                    gamma_multiplier: s,
                    sup_dist,
                    l1_dist,
                    model_sup_dist,
                    model_l1_dist,
                },
                warning,
            ))
        })
        .collect::<Result<_>>()?;

    let (rows, warnings): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let l1: Vec<f64> = rows.iter().map(|r| r.l1_dist).collect();
    let model_monotone = cpot_pi.as_ref().map(|_| {
        let v: Vec<f64> = rows.iter().map(|r| r.model_l1_dist.unwrap_or(f64::NAN)).collect();
        strictly_decreasing(&v)
    });
    Ok(ConvergenceReport {
        scaling,
        monotone: strictly_decreasing(&l1),
        rows,
        model_monotone,
        warnings: warnings.into_iter().flatten().collect(),
    })
}
