//! Hermitian overlap kernels and the time-series engine built on them.
//!
//! Every distribution here is a quadratic form `a(t)† K a(t)` with
//! `a_j(t) = w_j ψ̃(k_j) e^{-iω_j t}` and `ω_j = ħk_j²/2m`. The kernels are
//! positive semidefinite and numerically of low rank, so each one is
//! factorized once by pivoted Cholesky, `K ≈ Σ_r c_r c_r†`, and a time point
//! then costs `rank × N` operations instead of `N²`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cpot::CpotParams;
use crate::error::{Error, Result};
use crate::packets::{MomentumAmplitude, MomentumGrid};
use crate::params::PhysicalParams;
use crate::quadrature::trapezoid;
use crate::scattering::{
    one_channel_coefficients, two_channel_coefficients, OneChannelCoefficients, Reflection,
    TwoChannelCoefficients,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative diagonal residual at which the pivoted Cholesky factorization stops.
pub const FACTOR_TOLERANCE: f64 = 1e-15;

/// Smallest detection probability accepted by the operator normalization.
const MIN_DETECTION: f64 = 1e-300;

// ---------------------------------------------------------------------------
// Time grids and series

/// Uniform time grid `t_i = start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    /// `n` points from `start` to `end` inclusive.
    pub fn new(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::validation("time.n", format!("need at least 2 points, got {n}")));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::validation(
                "time",
                format!("need finite t_start < t_end, got [{start:e}, {end:e}]"),
            ));
        }
        Ok(Self {
            start,
            step: (end - start) / (n - 1) as f64,
            len: n,
        })
    }

    /// Accept explicit samples if they are uniform to 1e-9 of the step.
    pub fn from_samples(times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::validation("time", "need at least 2 samples"));
        }
        let n = times.len();
        let grid = Self::new(times[0], times[n - 1], n)?;
        let worst = times
            .iter()
            .enumerate()
            .map(|(i, &t)| (t - grid.at(i)).abs())
            .fold(0.0, f64::max);
        if worst > 1e-9 * grid.step {
            return Err(Error::NonUniformGrid(worst / grid.step));
        }
        Ok(grid)
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }
}

/// Named arrival-time distributions, with their CSV column names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Distribution {
    Pi,
    PiOn,
    PiK,
    Flux,
    PiJ,
    PiId,
    /// Strong-driving limit of `Π^ON` with the finite-γ delay factor.
    PiDelay,
}

impl Distribution {
    pub const ALL: [Distribution; 7] = [
        Distribution::Pi,
        Distribution::PiOn,
        Distribution::PiK,
        Distribution::Flux,
        Distribution::PiJ,
        Distribution::PiId,
        Distribution::PiDelay,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Distribution::Pi => "Pi",
            Distribution::PiOn => "Pi_ON",
            Distribution::PiK => "Pi_K",
            Distribution::Flux => "J",
            Distribution::PiJ => "Pi_J",
            Distribution::PiId => "Pi_id",
            Distribution::PiDelay => "Pi_delay",
        }
    }

    /// Whether the distribution is guaranteed non-negative.
    pub fn is_positive(self) -> bool {
        matches!(self, Distribution::Pi | Distribution::PiOn | Distribution::PiK | Distribution::PiDelay)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.column().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::validation(
                    "outputs",
                    format!("unknown distribution `{s}` (expected one of Pi, Pi_ON, Pi_K, J, Pi_J, Pi_id, Pi_delay)"),
                )
            })
    }
}

/// A time grid with one or more sampled distributions, all in 1/s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSeries {
    pub grid: TimeGrid,
    pub columns: Vec<(Distribution, Vec<f64>)>,
}

impl DistributionSeries {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            columns: Vec::new(),
        }
    }

    pub fn single(grid: TimeGrid, dist: Distribution, values: Vec<f64>) -> Self {
        let mut s = Self::new(grid);
        s.columns.push((dist, values));
        s
    }

    /// Add or replace a column.
    pub fn insert(&mut self, dist: Distribution, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.len {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}-point time grid",
                values.len(),
                self.grid.len
            )));
        }
        match self.columns.iter_mut().find(|(d, _)| *d == dist) {
            Some(slot) => slot.1 = values,
            None => self.columns.push((dist, values)),
        }
        Ok(())
    }

    /// Move every column of `other` into `self`; the grids must coincide.
    pub fn merge(&mut self, other: DistributionSeries) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::GridMismatch("series live on different time grids".into()));
        }
        for (d, v) in other.columns {
            self.insert(d, v)?;
        }
        Ok(())
    }

    pub fn get(&self, dist: Distribution) -> Option<&[f64]> {
        self.columns.iter().find(|(d, _)| *d == dist).map(|(_, v)| v.as_slice())
    }

    /// Trapezoid integral of one column over the grid.
    pub fn integral(&self, dist: Distribution) -> Option<f64> {
        self.get(dist).map(|v| trapezoid(v, self.grid.step))
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }
}

// ---------------------------------------------------------------------------
// Kernels and their low-rank factors

/// A Hermitian positive-semidefinite matrix given entry by entry.
pub trait HermitianKernel: Sync {
    fn len(&self) -> usize;
    fn entry(&self, j: usize, l: usize) -> Complex64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.len();
        (0..n).map(|j| (0..n).map(|l| self.entry(j, l)).collect()).collect()
    }
}

/// `K ≈ Σ_r c_r c_r†`, columns stored in pivot order.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    pub columns: Vec<Vec<Complex64>>,
    /// Largest diagonal entry of the kernel.
    pub scale: f64,
    /// Largest remaining diagonal of `K − Σ c c†` when the factorization stopped.
    pub residual: f64,
}

impl LowRankFactor {
    pub fn rank(&self) -> usize {
        self.columns.len()
    }
}

/// Pivoted Cholesky factorization, stopped once the remaining diagonal falls
/// below `rel_tol` times the largest diagonal entry.
pub fn pivoted_cholesky<K: HermitianKernel + ?Sized>(kernel: &K, rel_tol: f64) -> LowRankFactor {
    let n = kernel.len();
    let mut diag: Vec<f64> = (0..n).map(|j| kernel.entry(j, j).re).collect();
    let scale = diag.iter().cloned().fold(0.0, f64::max);
    let mut columns: Vec<Vec<Complex64>> = Vec::new();
    let mut used = vec![false; n];
    let threshold = rel_tol * scale;
    let mut residual = scale;
    while columns.len() < n {
        let (p, dp) = diag
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (j, &d)| if d > acc.1 { (j, d) } else { acc });
        residual = dp.max(0.0);
        if p == usize::MAX || dp <= threshold || dp <= 0.0 {
            break;
        }
        let mut col: Vec<Complex64> = (0..n).into_par_iter().map(|j| kernel.entry(j, p)).collect();
        for prev in &columns {
            let f = prev[p].conj();
            for (c, &v) in col.iter_mut().zip(prev) {
                *c -= v * f;
            }
        }
        let root = dp.sqrt();
        for c in col.iter_mut() {
            *c /= root;
        }
        col[p] = Complex64::new(root, 0.0);
        for (j, d) in diag.iter_mut().enumerate() {
            *d -= col[j].norm_sqr();
        }
        used[p] = true;
        diag[p] = 0.0;
        columns.push(col);
    }
    if columns.len() == n {
        residual = 0.0;
    }
    LowRankFactor {
        columns,
        scale,
        residual,
    }
}

/// Per-node amplitudes and complex wavenumbers of the detected channel:
/// one mode decaying into `x < 0`, two decaying into `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeProfile {
    left: (Complex64, Complex64),
    right: [(Complex64, Complex64); 2],
}

impl NodeProfile {
    /// `∫ conj(f_j) f_l dx`; each mode pair integrates to `1/(i(conj(κ_a) − κ_b))`,
    /// finite because the imaginary parts add.
    fn overlap(&self, other: &NodeProfile) -> Complex64 {
        let pair = |(a, ka): (Complex64, Complex64), (b, kb): (Complex64, Complex64)| a.conj() * b / (I * (ka.conj() - kb));
        let mut s = pair(self.left, other.left);
        for &ra in &self.right {
            for &rb in &other.right {
                s += pair(ra, rb);
            }
        }
        s
    }
}

/// Which stationary states the kernel is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Model {
    TwoChannel,
    ComplexPotential,
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-channel" => Ok(Model::TwoChannel),
            "complex-potential" => Ok(Model::ComplexPotential),
            other => Err(Error::validation(
                "model",
                format!("unknown model `{other}` (expected two-channel or complex-potential)"),
            )),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::TwoChannel => "two-channel",
            Model::ComplexPotential => "complex-potential",
        })
    }
}

#[derive(Debug, Clone)]
enum Source {
    TwoChannel {
        params: PhysicalParams,
        coeffs: Vec<TwoChannelCoefficients>,
    },
    OneChannel {
        cp: CpotParams,
        coeffs: Vec<OneChannelCoefficients>,
    },
}

/// Detection-rate overlap matrix `M_jl = rate·∫ conj(φ_j) φ_l dx` over the
/// detected component, in 1/s·m.
///
/// Entries are computed on demand from per-node profiles; the dense matrix is
/// never stored.
#[derive(Debug)]
pub struct OverlapKernel {
    source: Source,
    nodes: Vec<f64>,
    profiles: Vec<NodeProfile>,
    prefactor: f64,
    detection: Vec<f64>,
    factor: OnceLock<LowRankFactor>,
}

fn two_channel_profile(c: &TwoChannelCoefficients, ks: f64) -> NodeProfile {
    NodeProfile {
        left: (c.r2, c.q / ks),
        right: [(c.b_plus, c.k_plus / ks), (c.b_minus, c.k_minus / ks)],
    }
}

fn one_channel_profile(c: &OneChannelCoefficients) -> NodeProfile {
    NodeProfile {
        left: (Complex64::new(0.0, 0.0), I),
        right: [(c.t, c.kappa), (Complex64::new(0.0, 0.0), c.kappa)],
    }
}

pub fn overlap_kernel(params: &PhysicalParams, grid: &MomentumGrid, model: Model) -> Result<OverlapKernel> {
    match model {
        Model::TwoChannel => OverlapKernel::two_channel(params, grid),
        Model::ComplexPotential => OverlapKernel::one_channel(&CpotParams::from_physical(params)?, grid),
    }
}

impl OverlapKernel {
    pub fn two_channel(params: &PhysicalParams, grid: &MomentumGrid) -> Result<Self> {
        let coeffs: Vec<TwoChannelCoefficients> = grid
            .nodes
            .par_iter()
            .map(|&k| two_channel_coefficients(params, k))
            .collect::<Result<_>>()?;
        let ks = params.wavenumber_scale();
        let profiles = coeffs.iter().map(|c| two_channel_profile(c, ks)).collect();
        let detection = coeffs.iter().map(|c| c.detection_probability()).collect();
        Ok(Self {
            source: Source::TwoChannel {
                params: *params,
                coeffs,
            },
            nodes: grid.nodes.clone(),
            profiles,
            prefactor: params.gamma / (2.0 * PI * ks),
            detection,
            factor: OnceLock::new(),
        })
    }

    pub fn one_channel(cp: &CpotParams, grid: &MomentumGrid) -> Result<Self> {
        let coeffs: Vec<OneChannelCoefficients> = grid
            .nodes
            .par_iter()
            .map(|&k| one_channel_coefficients(cp, k))
            .collect::<Result<_>>()?;
        let profiles = coeffs.iter().map(one_channel_profile).collect();
        let detection = coeffs.iter().map(|c| c.detection_probability()).collect();
        Ok(Self {
            source: Source::OneChannel { cp: *cp, coeffs },
            nodes: grid.nodes.clone(),
            profiles,
            prefactor: cp.absorption_rate() / (2.0 * PI),
            detection,
            factor: OnceLock::new(),
        })
    }

    pub fn model(&self) -> Model {
        match self.source {
            Source::TwoChannel { .. } => Model::TwoChannel,
            Source::OneChannel { .. } => Model::ComplexPotential,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn two_channel_coefficients(&self) -> Option<&[TwoChannelCoefficients]> {
        match &self.source {
            Source::TwoChannel { coeffs, .. } => Some(coeffs),
            Source::OneChannel { .. } => None,
        }
    }

    pub fn one_channel_coefficients(&self) -> Option<&[OneChannelCoefficients]> {
        match &self.source {
            Source::OneChannel { coeffs, .. } => Some(coeffs),
            Source::TwoChannel { .. } => None,
        }
    }

    /// Detection probability `1 − |R(k_j)|²` per node (zero with no coupling).
    pub fn detection_probabilities(&self) -> &[f64] {
        &self.detection
    }

    pub fn reflections(&self) -> Vec<Complex64> {
        match &self.source {
            Source::TwoChannel { coeffs, .. } => coeffs.iter().map(|c| c.r1).collect(),
            Source::OneChannel { coeffs, .. } => coeffs.iter().map(|c| c.r).collect(),
        }
    }

    fn profile_at(&self, k: f64) -> Result<NodeProfile> {
        match &self.source {
            Source::TwoChannel { params, .. } => {
                Ok(two_channel_profile(&two_channel_coefficients(params, k)?, params.wavenumber_scale()))
            }
            Source::OneChannel { cp, .. } => Ok(one_channel_profile(&one_channel_coefficients(cp, k)?)),
        }
    }

    /// Kernel entry for arbitrary wavenumbers, not necessarily grid nodes.
    pub fn entry_at(&self, k: f64, k_prime: f64) -> Result<Complex64> {
        let a = self.profile_at(k)?;
        let b = self.profile_at(k_prime)?;
        Ok(a.overlap(&b) * self.prefactor)
    }

    /// Detection probability at an arbitrary wavenumber.
    pub fn detection_at(&self, k: f64) -> Result<f64> {
        match &self.source {
            Source::TwoChannel { params, .. } => Ok(two_channel_coefficients(params, k)?.detection_probability()),
            Source::OneChannel { cp, .. } => Ok(one_channel_coefficients(cp, k)?.detection_probability()),
        }
    }

    /// Low-rank factor, computed on first use.
    pub fn factor(&self) -> &LowRankFactor {
        self.factor.get_or_init(|| pivoted_cholesky(self, FACTOR_TOLERANCE))
    }

    /// `max |M − M†| / max |M|` over the dense matrix.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            for l in j..n {
                let a = self.entry(j, l);
                let b = self.entry(l, j);
                worst = worst.max((a - b.conj()).norm());
                scale = scale.max(a.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    fn check_grid(&self, amp: &MomentumAmplitude) -> Result<()> {
        if amp.grid.nodes != self.nodes {
            return Err(Error::GridMismatch(
                "packet amplitude and kernel use different momentum grids".into(),
            ));
        }
        Ok(())
    }

    /// `1/√b_j` per node, failing where the packet reaches undetected states.
    fn reweighting(&self) -> Result<Vec<f64>> {
        self.detection
            .iter()
            .zip(&self.nodes)
            .map(|(&b, &k)| {
                if b >= MIN_DETECTION {
                    Ok(1.0 / b.sqrt())
                } else {
                    Err(Error::SingularReweighting { k, detection: b })
                }
            })
            .collect()
    }
}

impl HermitianKernel for OverlapKernel {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn entry(&self, j: usize, l: usize) -> Complex64 {
        let v = self.profiles[j].overlap(&self.profiles[l]) * self.prefactor;
        if j == l {
            Complex64::new(v.re, 0.0)
        } else {
            v
        }
    }
}

// ---------------------------------------------------------------------------
// Series engine

/// How a group of projected sums turns into one output sample.
#[derive(Debug, Clone, Copy)]
enum Reduce {
    /// `scale · Σ_r |y_r|²` over rows `start..start+len`.
    SumSq { start: usize, len: usize, scale: f64 },
    /// `scale · Σ_r Re(conj(y_{a+r}) y_{b+r})`.
    Cross { a: usize, b: usize, len: usize, scale: f64 },
}

/// Rows `ρ_r` and reductions: each sample needs `y_r(t) = Σ_j ρ_rj e^{-iω_j t}`.
#[derive(Debug, Default)]
struct Plan {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    outputs: Vec<(Distribution, Reduce)>,
}

impl Plan {
    fn push_row(&mut self, row: impl Iterator<Item = Complex64>) {
        let (re, im): (Vec<f64>, Vec<f64>) = row.map(|z| (z.re, z.im)).unzip();
        self.re.push(re);
        self.im.push(im);
    }

    /// Rows `conj(c_r) ⊙ v` for every column of the factor; returns the first row index.
    fn push_factor(&mut self, factor: &LowRankFactor, v: &[Complex64]) -> usize {
        let start = self.re.len();
        for col in &factor.columns {
            self.push_row(col.iter().zip(v).map(|(c, x)| c.conj() * x));
        }
        start
    }

    fn run(&self, freqs: &[f64], grid: &TimeGrid) -> Vec<Vec<f64>> {
        let n = freqs.len();
        let rows = self.re.len();
        let samples: Vec<Vec<f64>> = (0..grid.len)
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n], vec![Complex64::new(0.0, 0.0); rows]),
                |(pr, pi, y), i| {
                    let t = grid.at(i);
                    for j in 0..n {
                        let (s, c) = (-freqs[j] * t).sin_cos();
                        pr[j] = c;
                        pi[j] = s;
                    }
                    for (r, yr) in y.iter_mut().enumerate() {
                        *yr = dot(&self.re[r], &self.im[r], pr, pi);
                    }
                    self.outputs.iter().map(|(_, red)| reduce(red, y)).collect()
                },
            )
            .collect();
        let mut out = vec![Vec::with_capacity(grid.len); self.outputs.len()];
        for s in samples {
            for (o, v) in out.iter_mut().zip(s) {
                o.push(v);
            }
        }
        out
    }
}

/// Complex dot product with a fixed four-lane summation order.
fn dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    let n = ar.len();
    let mut sr = [0.0; 4];
    let mut si = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for lane in 0..4 {
            let j = 4 * c + lane;
            sr[lane] += ar[j] * br[j] - ai[j] * bi[j];
            si[lane] += ar[j] * bi[j] + ai[j] * br[j];
        }
    }
    for j in 4 * chunks..n {
        sr[0] += ar[j] * br[j] - ai[j] * bi[j];
        si[0] += ar[j] * bi[j] + ai[j] * br[j];
    }
    Complex64::new((sr[0] + sr[1]) + (sr[2] + sr[3]), (si[0] + si[1]) + (si[2] + si[3]))
}

fn reduce(red: &Reduce, y: &[Complex64]) -> f64 {
    match *red {
        Reduce::SumSq { start, len, scale } => scale * y[start..start + len].iter().map(|z| z.norm_sqr()).sum::<f64>(),
        Reduce::Cross { a, b, len, scale } => {
            scale
                * (0..len)
                    .map(|r| (y[a + r].conj() * y[b + r]).re)
                    .sum::<f64>()
        }
    }
}

/// Series `v(t)† K v(t)` for an arbitrary factorized kernel, `v_j(t) = v_j e^{-iω_j t}`.
pub fn quadratic_form_series(factor: &LowRankFactor, weighted: &[Complex64], freqs: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let mut plan = Plan::default();
    let start = plan.push_factor(factor, weighted);
    plan.outputs.push((
        Distribution::Pi,
        Reduce::SumSq {
            start,
            len: factor.rank(),
            scale: 1.0,
        },
    ));
    plan.run(freqs, grid).remove(0)
}

/// Evaluate several distributions on one grid, sharing the phase evaluation.
///
/// `kernel` is needed for `Pi`, `Pi_ON` and `Pi_J`; `Pi_id` and `Pi_delay`
/// are produced elsewhere and rejected here.
pub fn evaluate(
    amp: &MomentumAmplitude,
    kernel: Option<&OverlapKernel>,
    grid: &TimeGrid,
    wanted: &[Distribution],
) -> Result<DistributionSeries> {
    let v = amp.weighted();
    let freqs = amp.free_frequencies();
    let flux_scale = amp.hbar / (2.0 * PI * amp.mass);
    let mut plan = Plan::default();

    let kernel_for = |d: Distribution| -> Result<&OverlapKernel> {
        let k = kernel.ok_or_else(|| Error::validation("outputs", format!("{d} requires a detection kernel")))?;
        k.check_grid(amp)?;
        Ok(k)
    };

    let mut plain: Option<(usize, usize)> = None;
    let mut reweighted: Option<(usize, usize)> = None;
    for &d in wanted {
        match d {
            Distribution::Pi => {
                let k = kernel_for(d)?;
                let (start, len) = *plain.get_or_insert_with(|| (plan.push_factor(k.factor(), &v), k.factor().rank()));
                plan.outputs.push((d, Reduce::SumSq { start, len, scale: 1.0 }));
            }
            Distribution::PiOn => {
                let k = kernel_for(d)?;
                let inv = k.reweighting()?;
                let (start, len) = match reweighted {
                    Some(r) => r,
                    None => {
                        let w: Vec<Complex64> = v.iter().zip(&inv).map(|(x, s)| x * s).collect();
                        let r = (plan.push_factor(k.factor(), &w), k.factor().rank());
                        reweighted = Some(r);
                        r
                    }
                };
                plan.outputs.push((d, Reduce::SumSq { start, len, scale: 1.0 }));
            }
            Distribution::PiJ => {
                let k = kernel_for(d)?;
                let inv = k.reweighting()?;
                let (a, len) = *plain.get_or_insert_with(|| (plan.push_factor(k.factor(), &v), k.factor().rank()));
                let dv: Vec<Complex64> = v.iter().zip(&inv).map(|(x, s)| x * (s * s)).collect();
                let b = plan.push_factor(k.factor(), &dv);
                plan.outputs.push((d, Reduce::Cross { a: b, b: a, len, scale: 1.0 }));
            }
            Distribution::PiK => {
                let start = plan.re.len();
                plan.push_row(v.iter().zip(&amp.grid.nodes).map(|(x, &k)| x * k.sqrt()));
                plan.outputs.push((
                    d,
                    Reduce::SumSq {
                        start,
                        len: 1,
                        scale: flux_scale,
                    },
                ));
            }
            Distribution::Flux => {
                let a = plan.re.len();
                plan.push_row(v.iter().zip(&amp.grid.nodes).map(|(x, &k)| x * k));
                plan.push_row(v.iter().copied());
                plan.outputs.push((
                    d,
                    Reduce::Cross {
                        a,
                        b: a + 1,
                        len: 1,
                        scale: flux_scale,
                    },
                ));
            }
            Distribution::PiId | Distribution::PiDelay => {
                return Err(Error::validation(
                    "outputs",
                    format!("{d} is not a direct quadratic form; use the dedicated routine"),
                ));
            }
        }
    }

    let values = plan.run(&freqs, grid);
    let mut series = DistributionSeries::new(*grid);
    for ((d, _), col) in plan.outputs.iter().zip(values) {
        series.insert(*d, col)?;
    }
    Ok(series)
}

/// First-photon distribution `Π(t)`.
pub fn pi_series(amp: &MomentumAmplitude, kernel: &OverlapKernel, grid: &TimeGrid) -> Result<DistributionSeries> {
    evaluate(amp, Some(kernel), grid, &[Distribution::Pi])
}

/// Operator-normalized distribution `Π^ON(t)`.
pub fn pi_on_series(amp: &MomentumAmplitude, kernel: &OverlapKernel, grid: &TimeGrid) -> Result<DistributionSeries> {
    evaluate(amp, Some(kernel), grid, &[Distribution::PiOn])
}

/// Symmetrized, not manifestly positive variant `Π^J(t)`.
pub fn pi_j_series(amp: &MomentumAmplitude, kernel: &OverlapKernel, grid: &TimeGrid) -> Result<DistributionSeries> {
    evaluate(amp, Some(kernel), grid, &[Distribution::PiJ])
}

/// Kijowski's distribution `Π_K(t) = (ħ/2πm)|Σ_j w_j ψ̃_j √k_j e^{-iω_j t}|²`.
pub fn kijowski_series(amp: &MomentumAmplitude, grid: &TimeGrid) -> DistributionSeries {
    evaluate(amp, None, grid, &[Distribution::PiK]).expect("Kijowski series needs no kernel")
}

/// Probability current of the free packet at `x = 0`.
pub fn flux_series(amp: &MomentumAmplitude, grid: &TimeGrid) -> DistributionSeries {
    evaluate(amp, None, grid, &[Distribution::Flux]).expect("flux series needs no kernel")
}

/// Probability `N(∞)` that the atom is never detected.
pub fn detection_loss<R: Reflection>(amp: &MomentumAmplitude, coeffs: &[R]) -> Result<f64> {
    if coeffs.len() != amp.len() {
        return Err(Error::GridMismatch(format!(
            "{} coefficients for {} momentum nodes",
            coeffs.len(),
            amp.len()
        )));
    }
    let detected: f64 = amp
        .grid
        .weights
        .iter()
        .zip(&amp.values)
        .zip(coeffs)
        .map(|((w, v), c)| w * v.norm_sqr() * c.detection_probability())
        .sum();
    Ok(amp.norm() - detected)
}
