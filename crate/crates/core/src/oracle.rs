//! Brute-force cross-checks for the spectral machinery.
//!
//! [`evolve_conditional`] integrates the two-component conditional
//! Schrödinger equation on a spatial grid with Crank–Nicolson steps, and
//! [`dense_overlap_check`] integrates kernel entries numerically in `x`.
//!
//! The grid solver works in natural units: lengths in `1/√(mγ/ħ)`, times in
//! `1/γ`. Cells are finite volumes whose faces include `x = 0`, so the laser
//! edge sits exactly on a face and the scheme stays second order across it.
//! The mesh is fine around the edge and coarsens geometrically away from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::TimeGrid;
use crate::packets::MomentumAmplitude;
use crate::params::PhysicalParams;
use crate::quadrature::gauss_legendre;
use crate::scattering::{stationary_state, two_channel_coefficients};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Packet norm allowed near the laser edge at the start of the evolution.
const START_MASS: f64 = 1e-4;

/// Largest allowed relative norm gain in one step.
const GAIN_TOLERANCE: f64 = 1e-12;

/// Spatial and temporal discretization of the grid solver, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSolverConfig {
    /// Left end of the grid (outer edge of the left absorbing layer), m.
    pub x_min: f64,
    /// Right end of the grid, m.
    pub x_max: f64,
    /// Cell size on `[-fine_extent, fine_extent]`, m.
    pub dx_fine: f64,
    /// Largest cell size far to the left, m.
    pub dx_coarse: f64,
    /// Half-width of the uniformly fine region around the edge, m.
    pub fine_extent: f64,
    /// Ratio of neighbouring cell sizes in the graded region.
    pub growth: f64,
    /// Time step, s.
    pub dt: f64,
    /// Width of each absorbing layer, m.
    pub layer_width: f64,
    /// Peak absorption rate of the layers, 1/s.
    pub layer_strength: f64,
    /// Exponent of the polynomial absorption ramp.
    pub layer_power: i32,
    /// Start time of the evolution, s.
    pub t0: f64,
}

/// Samples of the conditional evolution on the output grid.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRun {
    pub grid: TimeGrid,
    /// Norm `N(t)` of the undetected state.
    pub norm: Vec<f64>,
    /// Detection rate `γ‖ψ⁽²⁾‖²`, 1/s.
    pub pi: Vec<f64>,
    pub config: GridSolverConfig,
    pub cells: usize,
    pub steps: usize,
    /// Norm of the initial packet right of the start-position threshold.
    pub initial_overlap_mass: f64,
    /// Packet-weighted reflection of the absorbing layers.
    pub layer_reflection: f64,
    /// Expectation of the Hermitian part of the Hamiltonian per unit norm, J.
    pub energy: Vec<f64>,
}

/// Cell-centred mesh: faces, centres and widths in natural units.
#[derive(Debug, Clone)]
struct Mesh {
    centres: Vec<f64>,
    widths: Vec<f64>,
}

impl Mesh {
    fn build(cfg: &ScaledConfig) -> Result<Self> {
        let left = half_line_faces(cfg, -cfg.x_min)?;
        let right = half_line_faces(cfg, cfg.x_max)?;
        let faces: Vec<f64> = left.iter().rev().map(|x| -x).chain(right.into_iter().skip(1)).collect();
        let centres = faces.windows(2).map(|f| 0.5 * (f[0] + f[1])).collect();
        let widths = faces.windows(2).map(|f| f[1] - f[0]).collect();
        Ok(Self { centres, widths })
    }

    fn len(&self) -> usize {
        self.centres.len()
    }
}

/// Face positions `0, h, 2h, …` on `[0, extent]`: uniform fine cells up to
/// `fine_extent`, then cells growing geometrically up to the coarse size.
fn half_line_faces(cfg: &ScaledConfig, extent: f64) -> Result<Vec<f64>> {
    let mut faces = vec![0.0];
    let n_fine = (cfg.fine_extent.min(extent) / cfg.dx_fine).ceil() as usize;
    faces.extend((1..=n_fine).map(|i| i as f64 * cfg.dx_fine));
    let mut x = n_fine as f64 * cfg.dx_fine;
    let mut h = cfg.dx_fine;
    while x < extent {
        h = (h * cfg.growth).min(cfg.dx_coarse);
        x += h;
        faces.push(x);
        if faces.len() > 20_000_000 {
            return Err(Error::OracleConfig("mesh exceeds 2e7 cells per side".into()));
        }
    }
    Ok(faces)
}

/// The configuration converted to natural units.
#[derive(Debug, Clone, Copy)]
struct ScaledConfig {
    x_min: f64,
    x_max: f64,
    dx_fine: f64,
    dx_coarse: f64,
    fine_extent: f64,
    growth: f64,
    layer_width: f64,
    layer_strength: f64,
    layer_power: i32,
}

impl GridSolverConfig {
    fn scaled(&self, params: &PhysicalParams) -> ScaledConfig {
        let ks = params.wavenumber_scale();
        ScaledConfig {
            x_min: self.x_min * ks,
            x_max: self.x_max * ks,
            dx_fine: self.dx_fine * ks,
            dx_coarse: self.dx_coarse * ks,
            fine_extent: self.fine_extent * ks,
            growth: self.growth,
            layer_width: self.layer_width * ks,
            layer_strength: self.layer_strength / params.gamma,
            layer_power: self.layer_power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dx_fine", self.dx_fine),
            ("dx_coarse", self.dx_coarse),
            ("dt", self.dt),
            ("layer_width", self.layer_width),
            ("x_max", self.x_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OracleConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.x_min < -self.fine_extent - self.layer_width) {
            return Err(Error::OracleConfig(
                "x_min must lie left of the fine region and the absorbing layer".into(),
            ));
        }
        if self.x_max <= self.layer_width {
            return Err(Error::OracleConfig("x_max must exceed the absorbing-layer width".into()));
        }
        if self.dx_coarse < self.dx_fine {
            return Err(Error::OracleConfig("dx_coarse must not be smaller than dx_fine".into()));
        }
        if !(self.growth >= 1.0 && self.growth < 1.5) {
            return Err(Error::OracleConfig(format!("growth must be in [1, 1.5), got {}", self.growth)));
        }
        if !(self.layer_strength >= 0.0 && self.layer_power >= 1) {
            return Err(Error::OracleConfig("layer strength must be non-negative and power ≥ 1".into()));
        }
        Ok(())
    }

    /// Configuration sized for `amp` under `params` on the output grid `times`.
    ///
    /// The start time is moved back in multiples of the output spacing until
    /// at most `1e-4` of the packet norm lies right of `-5/Im q`.
    pub fn auto(amp: &MomentumAmplitude, params: &PhysicalParams, times: &TimeGrid) -> Result<Self> {
        let ks = params.wavenumber_scale();
        let gamma = params.gamma;
        let k_max = amp.grid.k_max() / ks;
        let k_mean = mean_wavenumber(amp) / ks;
        let omega_max = 0.5 * k_max * k_max;

        // Decay lengths of the scattering solutions around the packet.
        let mut im_min = f64::INFINITY;
        let mut im_q = f64::INFINITY;
        for &k in &[amp.grid.k_min(), mean_wavenumber(amp), amp.grid.k_max()] {
            let c = two_channel_coefficients(params, k)?;
            im_q = im_q.min(c.q.im / ks);
            if params.omega > 0.0 {
                im_min = im_min.min(c.k_plus.im / ks).min(c.k_minus.im / ks);
            }
        }
        let decay_right = if im_min.is_finite() { 1.0 / im_min } else { 0.0 };

        let dx_fine = 0.05_f64.min(0.1 / k_max);
        let dx_coarse = (0.04 / k_max).clamp(dx_fine, 1.0);
        let fine_extent = (10.0 / im_q).max(40.0 * decay_right).max(20.0 * dx_fine);
        let layer_width = (60.0 / k_mean).max(40.0);
        let layer_power = 3;
        let layer_strength = 5.0 * f64::from(layer_power + 1) * k_max / layer_width;

        // Time step from the largest kinetic frequency, commensurate with the output spacing.
        let out = times.step * gamma;
        let dt_target = (0.03 / omega_max).clamp(0.01, 5.0);
        let substeps = (out / dt_target).ceil().max(1.0);
        let dt = out / substeps;

        // Start time: step back until the packet is clear of the edge.
        let threshold = -5.0 / im_q;
        let mut back = 0usize;
        let mut mass = packet_mass_right_of(amp, threshold / ks, times.start)?;
        let mut m = 1usize;
        while mass > START_MASS {
            back = m;
            mass = packet_mass_right_of(amp, threshold / ks, times.start - back as f64 * times.step)?;
            if m > (1 << 16) {
                return Err(Error::OracleConfig("could not find a start time with the packet clear of the edge".into()));
            }
            m *= 2;
        }
        let t0 = times.start - back as f64 * times.step;

        // Left extent: the fastest part of the incoming packet at t0. The
        // reflected wave is absorbed by the layer and need not be kept.
        let lead_in = amp
            .spec()
            .components
            .iter()
            .map(|c| (c.x0 * ks).min(0.0) - k_max * ((c.t_min - t0) * gamma).max(0.0))
            .fold(0.0, f64::min);
        let sigma_k = momentum_spread(amp) / ks;
        let x_min = lead_in - fine_extent - 10.0 / sigma_k - 20.0 / k_mean - layer_width;
        let run = (times.end() - t0) * gamma;
        let x_max = fine_extent + layer_width + if params.omega == 0.0 { k_max * run } else { 0.0 };

        let cfg = Self {
            x_min: x_min / ks,
            x_max: x_max / ks,
            dx_fine: dx_fine / ks,
            dx_coarse: dx_coarse / ks,
            fine_extent: fine_extent / ks,
            growth: 1.04,
            dt: dt / gamma,
            layer_width: layer_width / ks,
            layer_strength: layer_strength * gamma,
            layer_power,
            t0,
        };
        cfg.validate()?;
        // Widen the layers until their reflection is below the limit.
        let mut cfg = cfg;
        for _ in 0..4 {
            if layer_reflection(amp, params, &cfg, times.end() - cfg.t0)? <= REFLECTION_LIMIT {
                return Ok(cfg);
            }
            cfg.x_min -= cfg.layer_width;
            cfg.x_max += cfg.layer_width;
            cfg.layer_width *= 2.0;
            cfg.layer_strength /= 2.0;
        }
        Ok(cfg)
    }

    /// Same configuration with spacings and step divided by `factor`.
    /// The graded region keeps its shape: the growth ratio becomes
    /// `growth^(1/factor)`.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            dx_fine: self.dx_fine / factor,
            dx_coarse: self.dx_coarse / factor,
            growth: self.growth.powf(1.0 / factor),
            dt: self.dt / factor,
            ..*self
        }
    }
}

fn mean_wavenumber(amp: &MomentumAmplitude) -> f64 {
    amp.grid
        .nodes
        .iter()
        .zip(&amp.grid.weights)
        .zip(&amp.values)
        .map(|((k, w), v)| k * w * v.norm_sqr())
        .sum::<f64>()
        / amp.norm()
}

fn momentum_spread(amp: &MomentumAmplitude) -> f64 {
    let mean = mean_wavenumber(amp);
    let var: f64 = amp
        .grid
        .nodes
        .iter()
        .zip(&amp.grid.weights)
        .zip(&amp.values)
        .map(|((k, w), v)| (k - mean).powi(2) * w * v.norm_sqr())
        .sum();
    (var / amp.norm()).sqrt()
}

/// Free evolution of the packet at one instant, on a momentum grid dense
/// enough to resolve the phases over `|x| ≤ x_extent`.
struct FreePacket {
    nodes: Vec<f64>,
    weighted: Vec<Complex64>,
    phase_t: Vec<f64>,
}

impl FreePacket {
    fn new(amp: &MomentumAmplitude, t: f64, x_extent: f64) -> Result<Self> {
        let (lo, hi) = amp.support;
        let per_panel = 16;
        let needed = 2 * amp.recommended_nodes(t) + (8.0 * (hi - lo) * x_extent / (2.0 * PI)).ceil() as usize;
        let n = needed.max(amp.len());
        let panels = n.div_ceil(per_panel);
        if panels * per_panel > 2_000_000 {
            return Err(Error::OracleConfig(format!("initial packet needs {} momentum nodes", panels * per_panel)));
        }
        let grid = crate::packets::MomentumGrid::composite(lo, hi, panels, per_panel)?;
        let c = amp.hbar / (2.0 * amp.mass);
        let weighted = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&k, &w)| amp.evaluate(k) * (w / (2.0 * PI).sqrt()))
            .collect();
        let phase_t = grid.nodes.iter().map(|&k| -c * k * k * t).collect();
        Ok(Self {
            nodes: grid.nodes,
            weighted,
            phase_t,
        })
    }

    fn at(&self, x: f64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weighted)
            .zip(&self.phase_t)
            .map(|((&k, &v), &p)| v * Complex64::from_polar(1.0, k * x + p))
            .sum()
    }
}

/// Norm of the freely evolved packet on `x > x_cut` at time `t` (SI).
fn packet_mass_right_of(amp: &MomentumAmplitude, x_cut: f64, t: f64) -> Result<f64> {
    // Free-packet extent from the momentum spread.
    let v_max = amp.hbar * amp.grid.k_max() / amp.mass;
    let v_min = amp.hbar * amp.grid.k_min() / amp.mass;
    let sigma_k = momentum_spread(amp);
    let x_hi = x_cut.max(v_max * t.max(0.0) + v_min * t.min(0.0)) + 20.0 / sigma_k + (v_max - v_min) * t.abs();
    if x_hi <= x_cut {
        return Ok(0.0);
    }
    let packet = FreePacket::new(amp, t, x_hi.abs().max(x_cut.abs()))?;
    let lambda = 2.0 * PI / amp.grid.k_max();
    let panels = (((x_hi - x_cut) / lambda) * 2.0).ceil().clamp(8.0, 200_000.0) as usize;
    let (x, w) = gauss_legendre(8);
    let h = (x_hi - x_cut) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = x_cut + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += 0.5 * h * wi * packet.at(mid + 0.5 * h * xi).norm_sqr();
        }
    }
    Ok(total)
}

/// Per-cell data of the pre-factored Crank–Nicolson system.
#[derive(Clone, Copy)]
struct CellCoef {
    /// Inverse of the eliminated diagonal block.
    inv: [Complex64; 4],
    /// `i·dt/2` times the kinetic couplings to the left and right neighbours.
    lower: Complex64,
    upper: Complex64,
    /// `i·dt/2` times the diagonal block of `H`: `[[d11, c], [c, d22]]`.
    d11: Complex64,
    d22: Complex64,
    c: Complex64,
    width: f64,
}

/// Zero out values deep in the subnormal-prone range; far tails of the
/// packet otherwise decay into subnormals and slow every step.
#[inline(always)]
fn flush(z: Complex64) -> Complex64 {
    if z.re.abs() < 1e-150 && z.im.abs() < 1e-150 {
        ZERO
    } else {
        z
    }
}

/// Pre-factored stepper for the interleaved 2×2 block-tridiagonal system
/// `(I + i·dt/2·H) ψⁿ⁺¹ = (I − i·dt/2·H) ψⁿ`.
struct Stepper {
    cells: Vec<CellCoef>,
    scratch: Vec<[Complex64; 2]>,
}

fn mat_inv(m: [Complex64; 4]) -> [Complex64; 4] {
    let det = m[0] * m[3] - m[1] * m[2];
    [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]
}

#[inline(always)]
fn mat_vec(m: &[Complex64; 4], v: [Complex64; 2]) -> [Complex64; 2] {
    [m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]]
}

impl Stepper {
    fn new(mesh: &Mesh, cfg: &ScaledConfig, w: f64, dt: f64) -> Self {
        let n = mesh.len();
        let c = &mesh.centres;
        let h = &mesh.widths;
        let half = I * (0.5 * dt);
        let one = Complex64::new(1.0, 0.0);
        let mut cells: Vec<CellCoef> = Vec::with_capacity(n);
        let mut prev_cprime = [ZERO; 4];
        for i in 0..n {
            let (lo, kin, up) = kinetic_row(mesh, i);
            let lower = half * lo;
            let upper = half * up;
            let wabs = absorption(cfg, c[i]);
            let coupling = if c[i] > 0.0 { 0.5 * w } else { 0.0 };
            let d11 = half * Complex64::new(kin, -wabs);
            let d22 = half * Complex64::new(kin, -wabs - 0.5);
            let cc = half * coupling;
            let mut block = [one + d11, cc, cc, one + d22];
            if i > 0 {
                for (bk, ck) in block.iter_mut().zip(prev_cprime) {
                    *bk -= lower * ck;
                }
            }
            let inv = mat_inv(block);
            prev_cprime = [inv[0] * upper, inv[1] * upper, inv[2] * upper, inv[3] * upper];
            cells.push(CellCoef {
                inv,
                lower,
                upper,
                d11,
                d22,
                c: cc,
                width: h[i],
            });
        }
        Self {
            cells,
            scratch: vec![[ZERO; 2]; n],
        }
    }

    /// One step in place; returns the new total and excited-state norms.
    fn step(&mut self, psi: &mut [[Complex64; 2]]) -> (f64, f64) {
        let n = psi.len();
        let cells = &self.cells;
        let scratch = &mut self.scratch;
        // Right-hand side fused with the forward elimination.
        let mut prev = [ZERO; 2];
        let mut left = [ZERO; 2];
        for i in 0..n {
            let cell = &cells[i];
            let here = psi[i];
            let right = if i + 1 < n { psi[i + 1] } else { [ZERO; 2] };
            let mut r = [
                here[0] - cell.d11 * here[0] - cell.c * here[1] - cell.lower * left[0] - cell.upper * right[0],
                here[1] - cell.c * here[0] - cell.d22 * here[1] - cell.lower * left[1] - cell.upper * right[1],
            ];
            r[0] -= cell.lower * prev[0];
            r[1] -= cell.lower * prev[1];
            prev = mat_vec(&cell.inv, r);
            scratch[i] = prev;
            left = here;
        }
        // Back substitution.
        let mut total = 0.0;
        let mut excited = 0.0;
        let mut next = scratch[n - 1];
        psi[n - 1] = next;
        let wl = cells[n - 1].width;
        total += wl * (next[0].norm_sqr() + next[1].norm_sqr());
        excited += wl * next[1].norm_sqr();
        for i in (0..n - 1).rev() {
            let cell = &cells[i];
            let c = mat_vec(&cell.inv, [cell.upper * next[0], cell.upper * next[1]]);
            next = [flush(scratch[i][0] - c[0]), flush(scratch[i][1] - c[1])];
            psi[i] = next;
            let e = next[1].norm_sqr();
            total += cell.width * (next[0].norm_sqr() + e);
            excited += cell.width * e;
        }
        (total, excited)
    }
}

/// `⟨ψ|H₀|ψ⟩/⟨ψ|ψ⟩` for the kinetic term plus the laser coupling, natural units.
fn hermitian_energy(mesh: &Mesh, psi: &[[Complex64; 2]], w: f64) -> f64 {
    let n = psi.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let (lo, d, up) = kinetic_row(mesh, i);
        let h = mesh.widths[i];
        let coupling = if mesh.centres[i] > 0.0 { 0.5 * w } else { 0.0 };
        for ch in 0..2 {
            let mut hp = psi[i][ch] * d + psi[i][1 - ch] * coupling;
            if i > 0 {
                hp += psi[i - 1][ch] * lo;
            }
            if i + 1 < n {
                hp += psi[i + 1][ch] * up;
            }
            num += h * (psi[i][ch].conj() * hp).re;
            den += h * psi[i][ch].norm_sqr();
        }
    }
    num / den
}

fn weighted_norms(psi: &[[Complex64; 2]], widths: &[f64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut excited = 0.0;
    for (p, &h) in psi.iter().zip(widths) {
        let e = p[1].norm_sqr() * h;
        total += p[0].norm_sqr() * h + e;
        excited += e;
    }
    (total, excited)
}

/// Crank–Nicolson evolution of the conditional state from a free packet at
/// `cfg.t0`, sampled on `times`.
pub fn evolve_conditional(
    amp: &MomentumAmplitude,
    params: &PhysicalParams,
    cfg: &GridSolverConfig,
    times: &TimeGrid,
) -> Result<OracleRun> {
    cfg.validate()?;
    let reflection = layer_reflection(amp, params, cfg, times.end() - cfg.t0)?;
    if reflection > REFLECTION_LIMIT {
        return Err(Error::OracleConfig(format!(
            "absorbing layers reflect {reflection:.3e} of the packet norm (limit {REFLECTION_LIMIT:.0e}); widen them"
        )));
    }
    if cfg.t0 > times.start {
        return Err(Error::OracleConfig("start time lies after the first output time".into()));
    }
    let gamma = params.gamma;
    let ks = params.wavenumber_scale();
    let sc = cfg.scaled(params);
    let mesh = Mesh::build(&sc)?;
    let w = params.omega_over_gamma();

    let out_step = times.step * gamma;
    let substeps = (out_step / (cfg.dt * gamma)).round().max(1.0) as usize;
    let dt = out_step / substeps as f64;
    let lead = ((times.start - cfg.t0) * gamma / dt).round() as usize;

    let mut stepper = Stepper::new(&mesh, &sc, w, dt);
    // Scaled amplitude: ∫|ψ̂|² dx̂ = ∫|ψ|² dx.
    let amp_scale = 1.0 / ks.sqrt();
    let packet = FreePacket::new(amp, cfg.t0, cfg.x_min.abs().max(cfg.x_max))?;
    let mut psi: Vec<[Complex64; 2]> = mesh
        .centres
        .iter()
        .map(|&x| [packet.at(x / ks) * amp_scale, ZERO])
        .collect();
    let threshold = {
        let c = two_channel_coefficients(params, mean_wavenumber(amp))?;
        -5.0 / (c.q.im / ks)
    };
    let initial_overlap_mass: f64 = psi
        .iter()
        .zip(&mesh.centres)
        .zip(&mesh.widths)
        .filter(|((_, &x), _)| x > threshold)
        .map(|((p, _), &h)| p[0].norm_sqr() * h)
        .sum();

    let energy_unit = params.hbar * gamma;
    let mut energy = Vec::with_capacity(times.len);
    let mut norm = Vec::with_capacity(times.len);
    let mut pi = Vec::with_capacity(times.len);
    let (mut last, mut excited) = weighted_norms(&psi, &mesh.widths);
    let total_steps = lead + substeps * (times.len - 1);
    let mut step = 0usize;
    let mut advance = |psi: &mut [[Complex64; 2]], step: &mut usize, last: &mut f64, excited: &mut f64| -> Result<()> {
        let (n, e) = stepper.step(psi);
        *step += 1;
        if n > *last * (1.0 + GAIN_TOLERANCE) {
            return Err(Error::SchemeViolation {
                step: *step,
                gain: n / *last - 1.0,
            });
        }
        *last = n;
        *excited = e;
        Ok(())
    };
    for _ in 0..lead {
        advance(&mut psi, &mut step, &mut last, &mut excited)?;
    }
    for i in 0..times.len {
        if i > 0 {
            for _ in 0..substeps {
                advance(&mut psi, &mut step, &mut last, &mut excited)?;
            }
        }
        norm.push(last);
        pi.push(gamma * excited);
        energy.push(energy_unit * hermitian_energy(&mesh, &psi, w));
    }
    debug_assert_eq!(step, total_steps);
    Ok(OracleRun {
        grid: *times,
        norm,
        pi,
        config: *cfg,
        cells: mesh.len(),
        steps: total_steps,
        initial_overlap_mass,
        layer_reflection: reflection,
        energy,
    })
}

/// Kinetic row of cell `i`: couplings to the left and right neighbours and
/// the diagonal, for `−½∂²` in natural units.
fn kinetic_row(mesh: &Mesh, i: usize) -> (f64, f64, f64) {
    let (c, h) = (&mesh.centres, &mesh.widths);
    let n = c.len();
    // Outside the grid the wave vanishes one cell width away.
    let dm = if i > 0 { c[i] - c[i - 1] } else { h[i] };
    let dp = if i + 1 < n { c[i + 1] - c[i] } else { h[i] };
    (-0.5 / (dm * h[i]), 0.5 * (1.0 / dm + 1.0 / dp) / h[i], -0.5 / (dp * h[i]))
}

fn absorption(cfg: &ScaledConfig, x: f64) -> f64 {
    let left_inner = cfg.x_min + cfg.layer_width;
    let right_inner = cfg.x_max - cfg.layer_width;
    let depth = if x < left_inner {
        (left_inner - x) / cfg.layer_width
    } else if x > right_inner {
        (x - right_inner) / cfg.layer_width
    } else {
        return 0.0;
    };
    cfg.layer_strength * depth.powi(cfg.layer_power)
}

/// Reflection amplitude of one absorbing layer for a discrete plane wave of
/// energy `e`. `order` lists the cells from the outer boundary inwards.
fn layer_amplitude(mesh: &Mesh, cfg: &ScaledConfig, e: f64, order: &[usize]) -> Complex64 {
    let n = mesh.len();
    let inner_edge = |x: f64| x > cfg.x_min + cfg.layer_width && x < cfg.x_max - cfg.layer_width;
    let mut prev = ZERO;
    let mut here = Complex64::new(1.0, 0.0);
    for (step, &i) in order.iter().enumerate() {
        let (lo, d, up) = kinetic_row(mesh, i);
        // Coupling towards the cell already visited and towards the next one.
        let (back, fwd) = if order[0] == 0 { (lo, up) } else { (up, lo) };
        let diag = Complex64::new(d - e, -absorption(cfg, mesh.centres[i]));
        let next = -(prev * back + here * diag) / fwd;
        let j = order.get(step + 1).copied().unwrap_or(i);
        let j2 = order.get(step + 2).copied().unwrap_or(j);
        // Decompose once two further cells of equal width lie past the layer.
        if inner_edge(mesh.centres[i])
            && j2 != j
            && (mesh.widths[i] - mesh.widths[j]).abs() <= 1e-9 * mesh.widths[i]
            && (mesh.widths[j] - mesh.widths[j2]).abs() <= 1e-9 * mesh.widths[i]
        {
            let h = mesh.widths[i];
            let cos_theta = 1.0 - e * h * h;
            let theta = Complex64::new(cos_theta, 0.0).acos();
            let z = (I * theta).exp();
            // here = A + B, next = A z + B / z, with A travelling inwards.
            let a = (next - here / z) / (z - 1.0 / z);
            let b = here - a;
            return a / b;
        }
        prev = here;
        here = next;
        let scale = here.norm().max(prev.norm());
        if scale > 1e100 {
            prev /= scale;
            here /= scale;
        }
        if step + 1 == n {
            break;
        }
    }
    Complex64::new(1.0, 0.0)
}

/// Packet-weighted reflection `Σ w_j |ψ̃_j|² |r(k_j)|²` of the absorbing
/// layers of `cfg`, over the wavenumbers fast enough to travel from the
/// laser edge into a layer and back within `duration` seconds. The left
/// layer always counts; the right one only with the laser off, since
/// otherwise the transmitted wave decays before reaching it.
pub fn layer_reflection(amp: &MomentumAmplitude, params: &PhysicalParams, cfg: &GridSolverConfig, duration: f64) -> Result<f64> {
    cfg.validate()?;
    let ks = params.wavenumber_scale();
    let sc = cfg.scaled(params);
    let mesh = Mesh::build(&sc)?;
    let n = mesh.len();
    let from_left: Vec<usize> = (0..n).collect();
    let from_right: Vec<usize> = (0..n).rev().collect();
    let round_trip = 2.0 * (-(sc.x_min + sc.layer_width)).min(sc.x_max - sc.layer_width);
    let reach = duration * params.gamma;
    let mut total = 0.0;
    for ((&k, &w), v) in amp.grid.nodes.iter().zip(&amp.grid.weights).zip(&amp.values) {
        if (k / ks) * reach < round_trip {
            continue;
        }
        let e = 0.5 * (k / ks).powi(2);
        let mut r = layer_amplitude(&mesh, &sc, e, &from_left).norm_sqr();
        if params.omega == 0.0 {
            r = r.max(layer_amplitude(&mesh, &sc, e, &from_right).norm_sqr());
        }
        total += w * v.norm_sqr() * r;
    }
    Ok(total / amp.norm())
}

/// Largest tolerated [`layer_reflection`].
pub const REFLECTION_LIMIT: f64 = 1e-6;

/// `γ ∫ conj(φ⁽²⁾_k(x)) φ⁽²⁾_{k′}(x) dx` by adaptive Gauss–Legendre
/// quadrature, truncated where the integrand has decayed by `1e-14`.
pub fn dense_overlap_check(params: &PhysicalParams, k: f64, k_prime: f64) -> Result<Complex64> {
    let a = two_channel_coefficients(params, k)?;
    let b = two_channel_coefficients(params, k_prime)?;
    if params.omega == 0.0 {
        return Ok(ZERO);
    }
    let integrand = |x: f64| stationary_state(&a, x)[1].conj() * stationary_state(&b, x)[1];

    let cutoff = 1e-14_f64.ln().abs();
    let left_decay = a.q.im + b.q.im;
    let right_decay = a.k_plus.im.min(a.k_minus.im) + b.k_plus.im.min(b.k_minus.im);
    let x_left = cutoff / left_decay;
    let x_right = cutoff / right_decay;
    let wave = a.q.re.abs().max(b.q.re.abs()).max(a.k_plus.re.abs()).max(a.k_minus.re.abs())
        .max(b.k_plus.re.abs()).max(b.k_minus.re.abs()).max(left_decay).max(right_decay);
    let oscillations = (x_left.max(x_right) * wave) / (2.0 * PI);
    if !oscillations.is_finite() || oscillations > 1e6 {
        return Err(Error::OracleConfig(format!(
            "decay length spans {oscillations:.3e} oscillations; the tail does not converge within budget"
        )));
    }
    let scale = 1.0 / wave;
    let left = adaptive(&integrand, -x_left, 0.0, scale)?;
    let right = adaptive(&integrand, 0.0, x_right, scale)?;
    Ok((left + right) * params.gamma)
}

/// Composite 16-point rule on panels no wider than `panel`, each accepted
/// once it agrees with a 24-point rule or split otherwise.
fn adaptive<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, panel: f64) -> Result<Complex64> {
    let (x16, w16) = gauss_legendre(16);
    let (x24, w24) = gauss_legendre(24);
    let rule = |lo: f64, hi: f64, x: &[f64], w: &[f64]| -> Complex64 {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        x.iter().zip(w).map(|(xi, wi)| f(mid + half * xi) * (half * wi)).sum()
    };
    let panels = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = ZERO;
    let mut stack: Vec<(f64, f64, u32)> = (0..panels).rev().map(|p| (a + p as f64 * h, a + (p + 1) as f64 * h, 0)).collect();
    let mut scale: f64 = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = rule(lo, hi, &x16, &w16);
        let fine = rule(lo, hi, &x24, &w24);
        scale = scale.max(fine.norm());
        if (coarse - fine).norm() <= 1e-15 * scale.max(fine.norm()) + 1e-300 || depth > 30 {
            if depth > 30 {
                return Err(Error::OracleConfig("adaptive quadrature failed to converge".into()));
            }
            total += fine;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}
