//! Incident momentum amplitudes `ψ̃(k)` on a composite Gauss–Legendre grid.
//!
//! A packet is a coherent sum of Gaussians, each minimal-uncertainty at a
//! chosen position and time under free evolution. The amplitude is sampled
//! only for `k > 0`; whatever norm the Gaussians carry at `k ≤ 0` is dropped,
//! recorded, and rejected above a configurable limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::quadrature::composite_gauss_legendre;
use crate::scattering::Reflection;

/// Width of a Gaussian component, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Width {
    /// Velocity spread Δv, m/s.
    Velocity(f64),
    /// Position spread Δx at the time of minimal uncertainty, m.
    Position(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: Complex64,
    /// Mean velocity, m/s.
    pub v_mean: f64,
    pub width: Width,
    /// Position at which the component is minimal, m.
    pub x0: f64,
    /// Time at which the component is minimal, s.
    pub t_min: f64,
}

impl GaussianComponent {
    pub fn new(weight: Complex64, v_mean: f64, width: Width, x0: f64, t_min: f64) -> Self {
        Self {
            weight,
            v_mean,
            width,
            x0,
            t_min,
        }
    }

    fn k0(&self, mass: f64, hbar: f64) -> f64 {
        mass * self.v_mean / hbar
    }

    /// Momentum-space standard deviation σ_k, 1/m.
    fn sigma_k(&self, mass: f64, hbar: f64) -> f64 {
        match self.width {
            Width::Velocity(dv) => mass * dv / hbar,
            Width::Position(dx) => 1.0 / (2.0 * dx),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let field = |name: &str| format!("packet[{index}].{name}");
        if !(self.weight.re.is_finite() && self.weight.im.is_finite()) || self.weight.norm() == 0.0 {
            return Err(Error::validation(field("weight"), "must be finite and non-zero"));
        }
        if !(self.v_mean.is_finite() && self.v_mean > 0.0) {
            return Err(Error::validation(
                field("v_mean"),
                format!("must be positive (incident from the left), got {}", self.v_mean),
            ));
        }
        let (name, w) = match self.width {
            Width::Velocity(dv) => ("dv", dv),
            Width::Position(dx) => ("dx", dx),
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::validation(field(name), format!("must be positive, got {w}")));
        }
        if !self.x0.is_finite() {
            return Err(Error::validation(field("x0"), "must be finite"));
        }
        if !self.t_min.is_finite() {
            return Err(Error::validation(field("t_min"), "must be finite"));
        }
        Ok(())
    }

    /// Unnormalized component amplitude; unit norm on the full real line
    /// when the weight has modulus one.
    fn value(&self, k: f64, mass: f64, hbar: f64) -> Complex64 {
        let k0 = self.k0(mass, hbar);
        let s = self.sigma_k(mass, hbar);
        let envelope = (2.0 * PI * s * s).powf(-0.25) * (-(k - k0) * (k - k0) / (4.0 * s * s)).exp();
        let phase = -k * self.x0 + hbar * k * k * self.t_min / (2.0 * mass);
        self.weight * Complex64::from_polar(envelope, phase)
    }
}

/// Coherent superposition of Gaussian components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub components: Vec<GaussianComponent>,
}

impl PacketSpec {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::validation("packet", "at least one component is required"));
        }
        for (i, c) in components.iter().enumerate() {
            c.validate(i)?;
        }
        Ok(Self { components })
    }

    pub fn single(component: GaussianComponent) -> Result<Self> {
        Self::new(vec![component])
    }

    fn raw_value(&self, k: f64, mass: f64, hbar: f64) -> Complex64 {
        self.components.iter().map(|c| c.value(k, mass, hbar)).sum()
    }

    /// Smallest `k₀ − 8σ` and largest `k₀ + 8σ` over the components, plus the
    /// smallest σ.
    fn support(&self, mass: f64, hbar: f64) -> (f64, f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut floor = f64::INFINITY;
        let mut smin = f64::INFINITY;
        for c in &self.components {
            let k0 = c.k0(mass, hbar);
            let s = c.sigma_k(mass, hbar);
            lo = lo.min(k0 - 8.0 * s);
            hi = hi.max(k0 + 8.0 * s);
            floor = floor.min(1e-6 * k0);
            smin = smin.min(s);
        }
        (lo, hi, floor, smin)
    }
}

/// Discretization settings for the momentum grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub nodes: usize,
    pub nodes_per_panel: usize,
    /// Largest tolerated norm at `k ≤ 0` before the packet is rejected.
    pub max_negative_mass: f64,
    /// Largest tolerated norm lost beyond the upper grid edge.
    pub max_truncation: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            nodes: 512,
            nodes_per_panel: 16,
            max_negative_mass: 1e-3,
            max_truncation: 1e-12,
        }
    }
}

impl GridPolicy {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }
}

/// Quadrature nodes `k_j > 0` (strictly increasing) and weights `w_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MomentumGrid {
    pub fn composite(k_min: f64, k_max: f64, panels: usize, per_panel: usize) -> Result<Self> {
        if !(k_min > 0.0 && k_max > k_min) {
            return Err(Error::validation(
                "momentum grid",
                format!("need 0 < k_min < k_max, got [{k_min:e}, {k_max:e}]"),
            ));
        }
        if panels == 0 || per_panel == 0 {
            return Err(Error::validation("momentum grid", "panel and node counts must be positive"));
        }
        let (nodes, weights) = composite_gauss_legendre(k_min, k_max, panels, per_panel);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn k_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn k_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interval covered by the panels, slightly wider than the outer nodes.
    pub fn span(&self) -> (f64, f64) {
        let n = self.len();
        if n < 2 {
            return (self.nodes[0], self.nodes[0]);
        }
        let pad_lo = 0.5 * self.weights[0];
        let pad_hi = 0.5 * self.weights[n - 1];
        (self.nodes[0] - pad_lo, self.nodes[n - 1] + pad_hi)
    }
}

/// `ψ̃(k_j)` sampled on a grid, normalized so `Σ w_j |ψ̃_j|² = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentumAmplitude {
    pub grid: MomentumGrid,
    pub values: Vec<Complex64>,
    pub mass: f64,
    pub hbar: f64,
    /// Norm of the raw superposition at `k ≤ 0`.
    pub negative_mass: f64,
    /// Norm outside the grid interval, including the negative part.
    pub discarded: f64,
    /// Interval `[k_min, k_max]` tiled by the quadrature panels.
    pub support: (f64, f64),
    spec: PacketSpec,
    scale: f64,
}

impl MomentumAmplitude {
    pub fn spec(&self) -> &PacketSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Normalized amplitude at an arbitrary `k`, consistent with `values`.
    pub fn evaluate(&self, k: f64) -> Complex64 {
        self.spec.raw_value(k, self.mass, self.hbar) * self.scale
    }

    /// Discrete norm `Σ w_j |ψ̃_j|²`.
    pub fn norm(&self) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }

    /// Quadrature-weighted amplitudes `w_j ψ̃_j`.
    pub fn weighted(&self) -> Vec<Complex64> {
        self.grid.weights.iter().zip(&self.values).map(|(&w, &v)| v * w).collect()
    }

    pub fn free_frequencies(&self) -> Vec<f64> {
        self.grid
            .nodes
            .iter()
            .map(|&k| self.hbar * k * k / (2.0 * self.mass))
            .collect()
    }

    /// Node count that resolves the phase `e^{-iħk²t/2m}` up to `|t| = t_max`.
    pub fn recommended_nodes(&self, t_max: f64) -> usize {
        recommended_nodes(&self.grid, self.mass, self.hbar, t_max)
    }
}

/// `N_k ≳ 4·ħ k_max Δk t_max / (2πm)`, but never fewer than 64.
pub fn recommended_nodes(grid: &MomentumGrid, mass: f64, hbar: f64, t_max: f64) -> usize {
    let (lo, hi) = grid.span();
    let n = 4.0 * hbar * hi * (hi - lo) * t_max.abs() / (2.0 * mass * PI);
    (n.ceil() as usize).max(64)
}

pub fn build_amplitude(spec: &PacketSpec, params: &PhysicalParams, policy: &GridPolicy) -> Result<MomentumAmplitude> {
    if policy.nodes == 0 || policy.nodes_per_panel == 0 {
        return Err(Error::validation("momentum.nodes", "must be positive"));
    }
    let (mass, hbar) = (params.mass, params.hbar);
    let (lo, hi, floor, smin) = spec.support(mass, hbar);
    let k_min = lo.max(floor);
    let k_max = hi;
    let panels = policy.nodes.div_ceil(policy.nodes_per_panel);
    let grid = MomentumGrid::composite(k_min, k_max, panels, policy.nodes_per_panel)?;

    // Norm bookkeeping on a wider reference interval, resolved well below the
    // narrowest component width and any x₀ beating between components.
    let ref_lo = lo - 4.0 * smin;
    let ref_hi = hi + 4.0 * smin;
    let beat = spec
        .components
        .iter()
        .flat_map(|a| spec.components.iter().map(move |b| (a.x0 - b.x0).abs()))
        .fold(0.0_f64, f64::max);
    let per_sigma = 2.0 + beat * smin / 4.0;
    let ref_panels = (((ref_hi - ref_lo) / smin) * per_sigma).ceil().clamp(32.0, 20_000.0) as usize;
    let mass_on = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = ((ref_panels as f64) * (b - a) / (ref_hi - ref_lo)).ceil().max(4.0) as usize;
        let (x, w) = composite_gauss_legendre(a, b, n, 16);
        x.iter()
            .zip(&w)
            .map(|(&k, &wk)| wk * spec.raw_value(k, mass, hbar).norm_sqr())
            .sum()
    };
    let total = mass_on(ref_lo, ref_hi);
    let negative = mass_on(ref_lo, 0.0_f64.min(ref_hi)) / total;
    let (span_lo, span_hi) = (k_min, k_max);
    let inside = mass_on(span_lo, span_hi) / total;
    let beyond = mass_on(span_hi, ref_hi) / total;
    let discarded = (1.0 - inside).max(0.0);

    if negative > policy.max_negative_mass {
        return Err(Error::NegativeMomentum {
            mass: negative,
            limit: policy.max_negative_mass,
        });
    }
    if beyond > policy.max_truncation {
        return Err(Error::TruncationLoss {
            lost: beyond,
            limit: policy.max_truncation,
        });
    }

    let raw: Vec<Complex64> = grid.nodes.iter().map(|&k| spec.raw_value(k, mass, hbar)).collect();
    let discrete: f64 = grid.weights.iter().zip(&raw).map(|(w, v)| w * v.norm_sqr()).sum();
    if !(discrete.is_finite() && discrete > 0.0) {
        return Err(Error::validation("packet", "amplitude vanishes on the momentum grid"));
    }
    let scale = discrete.sqrt().recip();
    let values = raw.into_iter().map(|v| v * scale).collect();
    Ok(MomentumAmplitude {
        grid,
        values,
        mass,
        hbar,
        negative_mass: negative,
        discarded,
        support: (k_min, k_max),
        spec: spec.clone(),
        scale,
    })
}

/// Operator-normalization reweighting `ψ̃_j (1 − |R(k_j)|²)^{-1/2}`.
///
/// The result is deliberately not renormalized.
pub fn on_reweight<R: Reflection>(amp: &MomentumAmplitude, coeffs: &[R]) -> Result<Vec<Complex64>> {
    if coeffs.len() != amp.len() {
        return Err(Error::GridMismatch(format!(
            "{} coefficients for {} momentum nodes",
            coeffs.len(),
            amp.len()
        )));
    }
    amp.values
        .iter()
        .zip(coeffs)
        .map(|(&v, c)| {
            let b = 1.0 - c.reflection().norm_sqr();
            if !(b >= 1e-300) {
                return Err(Error::SingularReweighting {
                    k: c.wavenumber(),
                    detection: b,
                });
            }
            Ok(v / b.sqrt())
        })
        .collect()
}

/// Freely evolved packet `ψ(x, t) = (2π)^{-1/2} Σ_j w_j ψ̃_j e^{i k_j x − iħk_j² t/2m}`.
pub fn free_evolve_at(amp: &MomentumAmplitude, x: f64, t: f64) -> Complex64 {
    let c = amp.hbar / (2.0 * amp.mass);
    let sum: Complex64 = amp
        .grid
        .nodes
        .iter()
        .zip(&amp.grid.weights)
        .zip(&amp.values)
        .map(|((&k, &w), &v)| v * w * Complex64::from_polar(1.0, k * x - c * k * k * t))
        .sum();
    sum / (2.0 * PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::units::{CM_PER_S, MICROMETRE, MICROSECOND};
    use crate::scattering::two_channel_coefficients;

    fn fig2() -> (PhysicalParams, PacketSpec) {
        let p = PhysicalParams::cesium(0.33).unwrap().scaled(10.0, 10.0).unwrap();
        let c = GaussianComponent::new(
            Complex64::new(1.0, 0.0),
            0.9 * CM_PER_S,
            Width::Position(0.106 * MICROMETRE),
            0.0,
            0.0,
        );
        (p, PacketSpec::single(c).unwrap())
    }

    #[test]
    fn unit_norm_and_ordered_grid() {
        let (p, spec) = fig2();
        let amp = build_amplitude(&spec, &p, &GridPolicy::default()).unwrap();
        assert_eq!(amp.len(), 512);
        assert!((amp.norm() - 1.0).abs() < 1e-12);
        assert!(amp.grid.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(amp.grid.k_min() > 0.0);
        // k₀/σ ≈ 4 for this packet: a few 1e-5 of the Gaussian sits at k < 0.
        assert!(amp.negative_mass > 1e-6 && amp.negative_mass < 1e-4, "{}", amp.negative_mass);
        assert!((amp.evaluate(amp.grid.nodes[100]) - amp.values[100]).norm() < 1e-15 * amp.values[100].norm().max(1.0));
    }

    #[test]
    fn superposition_norm() {
        let p = PhysicalParams::cesium(500.0).unwrap();
        let w = Complex64::new(0.5_f64.sqrt(), 0.0);
        let dx = Width::Position(0.031 * MICROMETRE);
        let spec = PacketSpec::new(vec![
            GaussianComponent::new(w, 18.96 * CM_PER_S, dx, 0.0, 2.0 * MICROSECOND),
            GaussianComponent::new(w, 5.42 * CM_PER_S, dx, 0.0, 2.0 * MICROSECOND),
        ])
        .unwrap();
        let amp = build_amplitude(&spec, &p, &GridPolicy::default()).unwrap();
        assert!((amp.norm() - 1.0).abs() < 1e-12);
        assert!(amp.discarded < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = GaussianComponent::new(Complex64::new(1.0, 0.0), -0.01, Width::Velocity(0.001), 0.0, 0.0);
        assert!(matches!(PacketSpec::single(bad), Err(Error::Validation { .. })));
        assert!(PacketSpec::new(vec![]).is_err());
        // Mean below its own width: too much weight at k ≤ 0.
        let p = PhysicalParams::cesium(0.33).unwrap();
        let broad = GaussianComponent::new(Complex64::new(1.0, 0.0), 0.01, Width::Velocity(0.01), 0.0, 0.0);
        let err = build_amplitude(&PacketSpec::single(broad).unwrap(), &p, &GridPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::NegativeMomentum { .. }));
    }

    #[test]
    fn minimal_packet_is_symmetric() {
        let p = PhysicalParams::cesium(0.66).unwrap();
        let c = GaussianComponent::new(Complex64::new(1.0, 0.0), 2.0 * CM_PER_S, Width::Velocity(0.48 * CM_PER_S), 0.0, 0.0);
        let amp = build_amplitude(&PacketSpec::single(c).unwrap(), &p, &GridPolicy::default()).unwrap();
        let dx = p.hbar / (2.0 * p.mass * 0.48 * CM_PER_S);
        for &x in &[0.3 * dx, dx, 2.0 * dx] {
            let a = free_evolve_at(&amp, x, 0.0).norm_sqr();
            let b = free_evolve_at(&amp, -x, 0.0).norm_sqr();
            assert!((a - b).abs() < 1e-9 * a.max(b));
        }
    }

    #[test]
    fn reweighting_leaves_laser_off_packet_alone() {
        let (p, spec) = fig2();
        let amp = build_amplitude(&spec, &p, &GridPolicy::default()).unwrap();
        let off = p.scaled(1.0, 0.0).unwrap();
        let coeffs: Vec<_> = amp.grid.nodes.iter().map(|&k| two_channel_coefficients(&off, k).unwrap()).collect();
        let re = on_reweight(&amp, &coeffs).unwrap();
        assert_eq!(re, amp.values);
        assert!(on_reweight(&amp, &coeffs[1..]).is_err());
    }
}
