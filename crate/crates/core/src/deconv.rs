//! Removal of the detector response from `Π^ON`.
//!
//! Fourier convention: `f̃(ν) = ∫ dt e^{-iνt} f(t)`, angular frequency ν.
//! The response `W(t)` is the first-photon density of an atom at rest, whose
//! transform is the reciprocal of a cubic in `iν`:
//!
//! `1/W̃(ν) = 1 + (γ/Ω² + 2/γ)iν + (3/Ω²)(iν)² + (2/γΩ²)(iν)³`.
//!
//! Deconvolution multiplies the zero-padded discrete spectrum by that cubic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Distribution, DistributionSeries, OverlapKernel, TimeGrid};
use crate::packets::MomentumAmplitude;
use crate::params::PhysicalParams;

/// Relative size the input must have decayed to at both grid ends.
pub const DECAY_LIMIT: f64 = 1e-10;

/// Amplification above which a deconvolved series is flagged as unreliable.
pub const AMPLIFICATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResponseForm {
    /// The full cubic.
    Full,
    /// Strong-driving truncation `1 + 2iν/γ`.
    StrongDriving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApparatusResponse {
    pub gamma: f64,
    pub omega: f64,
    pub form: ResponseForm,
}

impl ApparatusResponse {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        Self::with_form(params, ResponseForm::Full)
    }

    pub fn with_form(params: &PhysicalParams, form: ResponseForm) -> Result<Self> {
        if params.omega <= 0.0 {
            return Err(Error::Domain("the detector response needs Ω > 0".into()));
        }
        Ok(Self {
            gamma: params.gamma,
            omega: params.omega,
            form,
        })
    }

    /// Coefficients `[1, a₁, a₂, a₃]` of the cubic in `s = iν`.
    pub fn polynomial(&self) -> [f64; 4] {
        let (g, o2) = (self.gamma, self.omega * self.omega);
        match self.form {
            ResponseForm::Full => [1.0, g / o2 + 2.0 / g, 3.0 / o2, 2.0 / (g * o2)],
            ResponseForm::StrongDriving => [1.0, 2.0 / g, 0.0, 0.0],
        }
    }

    /// First-photon density `W(t)` from the partial fractions of `1/P(s)`.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let p = self.polynomial();
        match self.form {
            ResponseForm::StrongDriving => {
                let rate = 1.0 / p[1];
                rate * (-rate * t).exp()
            }
            ResponseForm::Full => {
                let roots = cubic_roots(p);
                roots
                    .iter()
                    .map(|&s| {
                        let dp = p[1] + 2.0 * p[2] * s + 3.0 * p[3] * s * s;
                        (s * t).exp() / dp
                    })
                    .sum::<Complex64>()
                    .re
            }
        }
    }
}

/// `1/W̃(ν)`.
pub fn inv_w_tilde(resp: &ApparatusResponse, nu: f64) -> Complex64 {
    let p = resp.polynomial();
    let s = Complex64::new(0.0, nu);
    // Horner
    ((s * p[3] + p[2]) * s + p[1]) * s + p[0]
}

/// Roots of `p₀ + p₁s + p₂s² + p₃s³` by Durand–Kerner iteration.
fn cubic_roots(p: [f64; 4]) -> [Complex64; 3] {
    let a = [p[0] / p[3], p[1] / p[3], p[2] / p[3]];
    let f = |s: Complex64| ((s + a[2]) * s + a[1]) * s + a[0];
    let radius = 1.0 + a.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::from_polar(0.4 * radius, 0.9);
    let mut z = [seed, seed * seed / (0.4 * radius), seed * seed * seed / (0.16 * radius * radius)];
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for i in 0..3 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = f(z[i]) / den;
            z[i] -= step;
            change = change.max(step.norm() / z[i].norm().max(1e-300));
        }
        if change < 1e-15 {
            break;
        }
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeconvOptions {
    /// Length of the transform as a multiple of the input length.
    pub pad_factor: usize,
    /// Fraction of the grid tapered at each end by a raised cosine, if any.
    pub window: Option<f64>,
}

impl Default for DeconvOptions {
    fn default() -> Self {
        Self {
            pad_factor: 4,
            window: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Deconvolved {
    /// Single-column series of `Π_id`.
    pub series: DistributionSeries,
    /// Largest `|Im|` of the inverse transform, relative to the input peak.
    pub max_imag_residual: f64,
    /// `max |1/W̃(ν)|` over the frequencies of the transform.
    pub amplification: f64,
    /// Set when the amplification exceeds [`AMPLIFICATION_LIMIT`].
    pub flagged: bool,
}

/// Deconvolve the `Pi_ON` column of `series`.
pub fn deconvolve(series: &DistributionSeries, resp: &ApparatusResponse, opts: &DeconvOptions) -> Result<Deconvolved> {
    let input = series
        .get(Distribution::PiOn)
        .ok_or_else(|| Error::validation("outputs", "Pi_id needs a Pi_ON column to deconvolve"))?;
    deconvolve_values(input, &series.grid, resp, opts)
}

/// Deconvolve arbitrary samples on a uniform grid.
pub fn deconvolve_values(
    input: &[f64],
    grid: &TimeGrid,
    resp: &ApparatusResponse,
    opts: &DeconvOptions,
) -> Result<Deconvolved> {
    let n = input.len();
    if n != grid.len {
        return Err(Error::GridMismatch(format!("{n} samples for a {}-point grid", grid.len)));
    }
    if opts.pad_factor == 0 {
        return Err(Error::validation("pad_factor", "must be at least 1"));
    }
    let peak = input.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::validation("series", "cannot deconvolve an identically zero series"));
    }
    let mut data: Vec<f64> = input.to_vec();
    match opts.window {
        Some(frac) => {
            if !(frac > 0.0 && frac <= 0.5) {
                return Err(Error::validation("window", format!("taper fraction must be in (0, 0.5], got {frac}")));
            }
            apply_tukey(&mut data, frac);
        }
        None => {
            let start = input[0].abs() / peak;
            let end = input[n - 1].abs() / peak;
            if start >= DECAY_LIMIT || end >= DECAY_LIMIT {
                return Err(Error::WrapAround {
                    start,
                    end,
                    limit: DECAY_LIMIT,
                });
            }
        }
    }

    let len = n * opts.pad_factor;
    let mut buf: Vec<Complex64> = (0..len)
        .map(|i| Complex64::new(if i < n { data[i] } else { 0.0 }, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let mut amplification: f64 = 0.0;
    for (m, z) in buf.iter_mut().enumerate() {
        let nu = angular_frequency(m, len, grid.step);
        let factor = inv_w_tilde(resp, nu);
        amplification = amplification.max(factor.norm());
        *z *= factor;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    let values: Vec<f64> = buf[..n].iter().map(|z| z.re * scale).collect();
    let max_imag_residual = buf[..n].iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max) / peak;
    Ok(Deconvolved {
        series: DistributionSeries::single(*grid, Distribution::PiId, values),
        max_imag_residual,
        amplification,
        flagged: amplification > AMPLIFICATION_LIMIT,
    })
}

/// Angular frequency of DFT bin `m` for `len` samples spaced `dt`.
fn angular_frequency(m: usize, len: usize, dt: f64) -> f64 {
    let signed = if m < len.div_ceil(2) { m as f64 } else { m as f64 - len as f64 };
    2.0 * PI * signed / (len as f64 * dt)
}

fn apply_tukey(data: &mut [f64], frac: f64) {
    let n = data.len();
    let taper = ((frac * (n - 1) as f64).floor() as usize).max(1);
    for i in 0..taper.min(n) {
        let w = 0.5 * (1.0 - (PI * i as f64 / taper as f64).cos());
        data[i] *= w;
        data[n - 1 - i] *= w;
    }
}

/// `Π̃^ON(ν)` evaluated directly from the momentum representation.
///
/// For each ν the double momentum integral collapses onto the curve
/// `ħ(k² − k′²)/2m = ν`; the smaller wavenumber runs over the grid and the
/// larger one is placed on the curve. Contributions whose larger wavenumber
/// leaves the grid interval are dropped.
pub fn pi_on_spectrum(amp: &MomentumAmplitude, kernel: &OverlapKernel, nus: &[f64]) -> Result<Vec<Complex64>> {
    if amp.grid.nodes != kernel.nodes() {
        return Err(Error::GridMismatch(
            "packet amplitude and kernel use different momentum grids".into(),
        ));
    }
    let (_, hi) = amp.grid.span();
    let scale = 2.0 * amp.mass / amp.hbar;
    let detection = kernel.detection_probabilities();
    for (&b, &k) in detection.iter().zip(&amp.grid.nodes) {
        if !(b >= 1e-300) {
            return Err(Error::SingularReweighting { k, detection: b });
        }
    }
    nus.par_iter()
        .map(|&nu| {
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, &ks) in amp.grid.nodes.iter().enumerate() {
                let kl = (ks * ks + scale * nu.abs()).sqrt();
                if kl > hi {
                    continue;
                }
                let bl = if nu == 0.0 { detection[j] } else { kernel.detection_at(kl)? };
                if !(bl >= 1e-300) {
                    return Err(Error::SingularReweighting { k: kl, detection: bl });
                }
                let weight = amp.grid.weights[j] * 2.0 * PI * amp.mass / (amp.hbar * kl) / (detection[j] * bl).sqrt();
                let (psi_s, psi_l) = (amp.values[j], amp.evaluate(kl));
                let term = if nu >= 0.0 {
                    psi_l.conj() * psi_s * kernel.entry_at(kl, ks)?
                } else {
                    psi_s.conj() * psi_l * kernel.entry_at(ks, kl)?
                };
                sum += term * weight;
            }
            Ok(sum)
        })
        .collect()
}
