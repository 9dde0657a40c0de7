//! Scenario files and the drivers behind the command-line tool.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! preset = "cesium"          # optional; supplies gamma and mass
//! gamma_over_cs = 10.0       # or gamma = <1/s>
//! omega_over_gamma = 0.33    # or omega = <rad/s>
//! model = "two-channel"      # or "complex-potential"
//! outputs = ["Pi_ON", "Pi_K", "J"]
//!
//! [time]                     # microseconds
//! t_start = -3000.0
//! t_end = 3000.0
//! n = 6001
//!
//! [momentum]
//! nodes = 2048
//! per_panel = 16
//!
//! [[packet]]                 # cm/s, µm, µs
//! weight_re = 1.0
//! weight_im = 0.0
//! v_mean = 0.9
//! dx = 0.106                 # or dv = <cm/s>
//! x0 = 0.0
//! t_min = 0.0
//!
//! [deconv]
//! pad_factor = 4
//! window = 0.1
//! ```
//!
//! `v0` (J) overrides the absorber strength of the complex-potential model,
//! which otherwise is `ħΩ²/2γ`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{convergence_report, delay_kernel_series, large_gamma_warning, ConvergenceReport, Scaling};
use crate::cpot::CpotParams;
use crate::deconv::{deconvolve, ApparatusResponse, DeconvOptions};
use crate::error::{Error, Result};
use crate::kernels::{detection_loss, evaluate, Distribution, DistributionSeries, Model, OverlapKernel, TimeGrid};
use crate::oracle::{evolve_conditional, GridSolverConfig, OracleRun};
use crate::packets::{build_amplitude, GaussianComponent, GridPolicy, MomentumAmplitude, PacketSpec, Width};
use crate::params::units::{CM_PER_S, MICROMETRE, MICROSECOND};
use crate::params::{validate, PhysicalParams, RawParams};
use crate::scattering::two_channel_coefficients;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative sup-norm tolerance of the grid-solver comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t_start: f64,
    t_end: f64,
    n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentumSection {
    nodes: Option<usize>,
    per_panel: Option<usize>,
    max_negative_mass: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketSection {
    #[serde(default = "one")]
    weight_re: f64,
    #[serde(default)]
    weight_im: f64,
    v_mean: f64,
    dv: Option<f64>,
    dx: Option<f64>,
    #[serde(default)]
    x0: f64,
    #[serde(default)]
    t_min: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeconvSection {
    pad_factor: Option<usize>,
    window: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    preset: Option<String>,
    gamma: Option<f64>,
    gamma_over_cs: Option<f64>,
    omega: Option<f64>,
    omega_over_gamma: Option<f64>,
    mass: Option<f64>,
    model: Option<String>,
    v0: Option<f64>,
    outputs: Vec<String>,
    time: TimeSection,
    momentum: Option<MomentumSection>,
    packet: Vec<PacketSection>,
    deconv: Option<DeconvSection>,
}

/// A validated scenario in SI units.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub packet: PacketSpec,
    pub times: TimeGrid,
    pub policy: GridPolicy,
    pub outputs: Vec<Distribution>,
    pub model: Model,
    /// Absorber strength override for the complex-potential model, J.
    pub v0: Option<f64>,
    /// Deconvolution settings, used when `Pi_id` is requested.
    pub deconv: DeconvOptions,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let raw = RawParams {
            preset: file.preset,
            gamma: file.gamma,
            gamma_over_cs: file.gamma_over_cs,
            omega: file.omega,
            omega_over_gamma: file.omega_over_gamma,
            mass: file.mass,
        };
        let params = validate(&raw)?;

        let times = TimeGrid::new(file.time.t_start * MICROSECOND, file.time.t_end * MICROSECOND, file.time.n)
            .map_err(|e| match e {
                Error::Validation { reason, .. } => Error::validation("time", reason),
                other => other,
            })?;

        let mut policy = GridPolicy::default();
        if let Some(m) = file.momentum {
            if let Some(n) = m.nodes {
                policy.nodes = n;
            }
            if let Some(p) = m.per_panel {
                policy.nodes_per_panel = p;
            }
            if let Some(x) = m.max_negative_mass {
                policy.max_negative_mass = x;
            }
        }
        if policy.nodes == 0 || policy.nodes_per_panel == 0 {
            return Err(Error::validation("momentum", "nodes and per_panel must be positive"));
        }

        if file.packet.is_empty() {
            return Err(Error::validation("packet", "at least one packet component is required"));
        }
        let mut components = Vec::with_capacity(file.packet.len());
        for (i, p) in file.packet.iter().enumerate() {
            let width = match (p.dv, p.dx) {
                (Some(dv), None) => Width::Velocity(dv * CM_PER_S),
                (None, Some(dx)) => Width::Position(dx * MICROMETRE),
                _ => {
                    return Err(Error::validation(format!("packet[{i}]"), "give exactly one of dv or dx"));
                }
            };
            components.push(GaussianComponent::new(
                Complex64::new(p.weight_re, p.weight_im),
                p.v_mean * CM_PER_S,
                width,
                p.x0 * MICROMETRE,
                p.t_min * MICROSECOND,
            ));
        }
        let packet = PacketSpec::new(components)?;

        let model = match file.model.as_deref() {
            None => Model::TwoChannel,
            Some(s) => s.parse()?,
        };
        if let Some(v0) = file.v0 {
            if model != Model::ComplexPotential {
                return Err(Error::validation("v0", "only meaningful with the complex-potential model"));
            }
            if !(v0.is_finite() && v0 >= 0.0) {
                return Err(Error::validation("v0", format!("must be non-negative, got {v0}")));
            }
        }

        let mut outputs = Vec::with_capacity(file.outputs.len());
        for name in &file.outputs {
            let d: Distribution = name.parse()?;
            if !outputs.contains(&d) {
                outputs.push(d);
            }
        }

        let mut deconv = DeconvOptions::default();
        if let Some(d) = file.deconv {
            if let Some(p) = d.pad_factor {
                deconv.pad_factor = p;
            }
            deconv.window = d.window;
        }

        let s = Self {
            params,
            packet,
            times,
            policy,
            outputs,
            model,
            v0: file.v0,
            deconv,
        };
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_toml(&text)
    }

    /// Consistency of the requested outputs with the model.
    pub fn check(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::validation("outputs", "at least one output column is required"));
        }
        let has = |d| self.outputs.contains(&d);
        if has(Distribution::PiId) && !has(Distribution::PiOn) {
            return Err(Error::validation("outputs", "Pi_id requires Pi_ON"));
        }
        if self.model == Model::ComplexPotential {
            for d in [Distribution::PiId, Distribution::PiDelay] {
                if has(d) {
                    return Err(Error::validation("outputs", format!("{d} is only available for the two-channel model")));
                }
            }
        }
        if self.deconv.pad_factor == 0 {
            return Err(Error::validation("pad_factor", "must be at least 1"));
        }
        if let Some(w) = self.deconv.window {
            if !(w > 0.0 && w <= 0.5) {
                return Err(Error::validation("window", format!("taper fraction must be in (0, 0.5], got {w}")));
            }
        }
        Ok(())
    }

    /// Request `Pi_id` (and the `Pi_ON` it is computed from).
    pub fn enable_deconvolution(&mut self) {
        for d in [Distribution::PiOn, Distribution::PiId] {
            if !self.outputs.contains(&d) {
                self.outputs.push(d);
            }
        }
    }

    pub fn amplitude(&self) -> Result<MomentumAmplitude> {
        build_amplitude(&self.packet, &self.params, &self.policy)
    }

    pub fn cpot_params(&self) -> Result<CpotParams> {
        match self.v0 {
            Some(v0) => CpotParams::new(v0, self.params.mass, self.params.hbar),
            None => CpotParams::from_physical(&self.params),
        }
    }

    pub fn kernel(&self, amp: &MomentumAmplitude) -> Result<OverlapKernel> {
        match self.model {
            Model::TwoChannel => OverlapKernel::two_channel(&self.params, &amp.grid),
            Model::ComplexPotential => OverlapKernel::one_channel(&self.cpot_params()?, &amp.grid),
        }
    }
}

/// Named check recorded in the metadata.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl InvariantCheck {
    fn new(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub momentum_nodes: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub kernel_rank: Option<usize>,
    pub time_points: usize,
    pub t_start: f64,
    pub t_step: f64,
    pub negative_momentum_mass: f64,
    pub discarded_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvSummary {
    pub options: DeconvOptions,
    pub amplification: f64,
    pub flagged: bool,
    pub max_imag_residual: f64,
}

/// Sidecar written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub version: String,
    pub model: String,
    pub params: PhysicalParams,
    pub cpot_v0: Option<f64>,
    pub packet: PacketSpec,
    pub momentum_policy: GridPolicy,
    pub grids: GridSummary,
    pub columns: Vec<String>,
    pub checks: Vec<InvariantCheck>,
    pub hermiticity_residual: Option<f64>,
    pub deconvolution: Option<DeconvSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub series: DistributionSeries,
    pub metadata: RunMetadata,
}

/// Compute every requested column of `scenario`.
pub fn run(scenario: &Scenario) -> Result<RunResult> {
    scenario.check()?;
    let amp = scenario.amplitude()?;
    let grid = scenario.times;
    let needs_kernel = scenario
        .outputs
        .iter()
        .any(|d| matches!(d, Distribution::Pi | Distribution::PiOn | Distribution::PiJ));
    let kernel = if needs_kernel { Some(scenario.kernel(&amp)?) } else { None };

    let direct: Vec<Distribution> = scenario
        .outputs
        .iter()
        .copied()
        .filter(|d| !matches!(d, Distribution::PiId | Distribution::PiDelay))
        .collect();
    let mut series = evaluate(&amp, kernel.as_ref(), &grid, &direct)?;

    let mut deconvolution = None;
    if scenario.outputs.contains(&Distribution::PiId) {
        let resp = ApparatusResponse::new(&scenario.params)?;
        let d = deconvolve(&series, &resp, &scenario.deconv)?;
        deconvolution = Some(DeconvSummary {
            options: scenario.deconv,
            amplification: d.amplification,
            flagged: d.flagged,
            max_imag_residual: d.max_imag_residual,
        });
        series.merge(d.series)?;
    }
    if scenario.outputs.contains(&Distribution::PiDelay) {
        series.merge(delay_kernel_series(&amp, &scenario.params, &grid))?;
    }
    // Columns in the requested order.
    let mut ordered = DistributionSeries::new(grid);
    for &d in &scenario.outputs {
        ordered.insert(d, series.get(d).expect("computed column").to_vec())?;
    }

    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut loss = None;
    if let Some(k) = &kernel {
        let l = match (k.two_channel_coefficients(), k.one_channel_coefficients()) {
            (Some(c), _) => detection_loss(&amp, c)?,
            (_, Some(c)) => detection_loss(&amp, c)?,
            _ => unreachable!("kernel carries coefficients"),
        };
        loss = Some(l);
    }
    for (d, _) in &ordered.columns {
        let integral = ordered.integral(*d).expect("column present");
        match d {
            Distribution::PiOn | Distribution::PiK | Distribution::Flux | Distribution::PiJ | Distribution::PiId | Distribution::PiDelay => {
                checks.push(InvariantCheck::new(&format!("integral_{}", d.column()), integral, 1.0, 1e-4));
            }
            Distribution::Pi => {
                let l = loss.expect("kernel present for Pi");
                checks.push(InvariantCheck::new("integral_Pi_plus_final_norm", integral + l, 1.0, 1e-4));
            }
        }
    }
    checks.push(InvariantCheck::new("packet_norm", amp.norm(), 1.0, 1e-12));
    for c in checks.iter().filter(|c| !c.passed) {
        warnings.push(format!(
            "{} = {:.6e} differs from {} by more than {:.0e}; widen the time window or refine the grids",
            c.name, c.value, c.target, c.tolerance
        ));
    }
    if let Some(d) = &deconvolution {
        if d.flagged {
            warnings.push(format!("deconvolution amplifies noise by up to {:.3e}", d.amplification));
        }
    }
    if scenario.model == Model::TwoChannel && scenario.outputs.contains(&Distribution::PiOn) {
        if let Some(w) = large_gamma_warning(&scenario.params, &amp) {
            warnings.push(w);
        }
    }

    let metadata = RunMetadata {
        version: VERSION.into(),
        model: scenario.model.to_string(),
        params: scenario.params,
        cpot_v0: match scenario.model {
            Model::ComplexPotential => Some(scenario.cpot_params()?.v0),
            Model::TwoChannel => None,
        },
        packet: scenario.packet.clone(),
        momentum_policy: scenario.policy,
        grids: GridSummary {
            momentum_nodes: amp.len(),
            k_min: amp.grid.k_min(),
            k_max: amp.grid.k_max(),
            kernel_rank: kernel.as_ref().map(|k| k.factor().rank()),
            time_points: grid.len,
            t_start: grid.start,
            t_step: grid.step,
            negative_momentum_mass: amp.negative_mass,
            discarded_mass: amp.discarded,
        },
        columns: ordered.columns.iter().map(|(d, _)| d.column().to_string()).collect(),
        checks,
        hermiticity_residual: kernel.as_ref().map(|k| k.hermiticity_residual()),
        deconvolution,
        warnings,
    };
    Ok(RunResult { series: ordered, metadata })
}

/// CSV text: `t_s` followed by the series columns, 12 significant digits.
pub fn csv_string(series: &DistributionSeries) -> String {
    let mut out = String::from("t_s");
    for (d, _) in &series.columns {
        out.push(',');
        out.push_str(d.column());
    }
    out.push('\n');
    for i in 0..series.grid.len {
        let _ = write!(out, "{:.11e}", series.grid.at(i));
        for (_, v) in &series.columns {
            let _ = write!(out, ",{:.11e}", v[i]);
        }
        out.push('\n');
    }
    out
}

/// Matplotlib script plotting every column of `csv_name` against t in µs.
pub fn plot_script(csv_name: &str, series: &DistributionSeries) -> String {
    let mut s = String::new();
    s.push_str("import csv\nimport matplotlib.pyplot as plt\n\n");
    let _ = writeln!(s, "with open({csv_name:?}) as f:");
    s.push_str("    rows = list(csv.DictReader(f))\n");
    s.push_str("t = [float(r['t_s']) * 1e6 for r in rows]\n");
    s.push_str("fig, ax = plt.subplots(figsize=(6, 4))\n");
    let styles = ["'-'", "'o'", "'--'", "'-.'", "':'", "'s'", "'^'"];
    for (i, (d, _)) in series.columns.iter().enumerate() {
        let style = styles[i % styles.len()];
        let extra = if style.contains('o') || style.contains('s') || style.contains('^') {
            ", markevery=max(1, len(t) // 60), mfc='white'"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "ax.plot(t, [float(r['{c}']) * 1e-6 for r in rows], {style}, label='{c}'{extra})",
            c = d.column()
        );
    }
    s.push_str("ax.axhline(0.0, color='0.6', lw=0.5)\n");
    s.push_str("ax.set_xlabel('t (µs)')\nax.set_ylabel('distribution (1/µs)')\nax.legend()\nfig.tight_layout()\n");
    let stem = csv_name.trim_end_matches(".csv");
    let _ = writeln!(s, "fig.savefig({:?})", format!("{stem}.pdf"));
    s
}

/// Paths produced by [`write_run`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub plot: PathBuf,
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

/// Write `<stem>.csv`, `<stem>.json` and `<stem>_plot.py` into `dir`.
pub fn write_run(result: &RunResult, dir: &Path, stem: &str) -> Result<WrittenFiles> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let metadata = dir.join(format!("{stem}.json"));
    let plot = dir.join(format!("{stem}_plot.py"));
    write_file(&csv, &csv_string(&result.series))?;
    let json = serde_json::to_string_pretty(&result.metadata).map_err(|e| Error::Parse(e.to_string()))?;
    write_file(&metadata, &(json + "\n"))?;
    write_file(&plot, &plot_script(&format!("{stem}.csv"), &result.series))?;
    Ok(WrittenFiles { csv, metadata, plot })
}

/// Distance table of `Π^ON` against `Π_K` along a γ scaling family.
pub fn converge(scenario: &Scenario, multipliers: &[f64], scaling: Scaling) -> Result<ConvergenceReport> {
    let amp = scenario.amplitude()?;
    convergence_report(&amp, &scenario.params, &scenario.times, multipliers, scaling)
}

pub fn converge_csv(report: &ConvergenceReport) -> String {
    let with_model = report.rows.iter().any(|r| r.model_l1_dist.is_some());
    let mut s = String::from("gamma_multiplier,sup_dist,l1_dist");
    if with_model {
        s.push_str(",model_sup_dist,model_l1_dist");
    }
    s.push('\n');
    for r in &report.rows {
        let _ = write!(s, "{:.11e},{:.11e},{:.11e}", r.gamma_multiplier, r.sup_dist, r.l1_dist);
        if with_model {
            let _ = write!(
                s,
                ",{:.11e},{:.11e}",
                r.model_sup_dist.unwrap_or(f64::NAN),
                r.model_l1_dist.unwrap_or(f64::NAN)
            );
        }
        s.push('\n');
    }
    s
}

/// Two-channel coefficient table on `n` wavenumbers spanning the packet grid.
pub fn coeffs_csv(scenario: &Scenario, n: usize) -> Result<String> {
    if n < 2 {
        return Err(Error::validation("points", "need at least two wavenumbers"));
    }
    let amp = scenario.amplitude()?;
    let (lo, hi) = amp.support;
    let names = ["r1", "r2", "c_plus", "c_minus", "b_plus", "b_minus"];
    let mut s = String::from("k");
    for n in names {
        let _ = write!(s, ",{n}_re,{n}_im");
    }
    s.push('\n');
    for i in 0..n {
        let k = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let c = two_channel_coefficients(&scenario.params, k)?;
        let _ = write!(s, "{k:.11e}");
        for z in [c.r1, c.r2, c.c_plus, c.c_minus, c.b_plus, c.b_minus] {
            let _ = write!(s, ",{:.11e},{:.11e}", z.re, z.im);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Grid-solver run compared with the spectral `Π`.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub run: OracleRun,
    pub spectral_pi: Vec<f64>,
    /// `max|Π_grid − Π_spectral| / max Π_spectral`.
    pub sup_rel: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evolve `scenario` with the grid solver and compare against the spectral `Π`.
pub fn oracle_compare(scenario: &Scenario, config: Option<GridSolverConfig>) -> Result<OracleComparison> {
    if scenario.model != Model::TwoChannel {
        return Err(Error::validation("model", "the grid solver handles the two-channel model only"));
    }
    let amp = scenario.amplitude()?;
    let kernel = OverlapKernel::two_channel(&scenario.params, &amp.grid)?;
    let spectral = evaluate(&amp, Some(&kernel), &scenario.times, &[Distribution::Pi])?;
    let spectral_pi = spectral.get(Distribution::Pi).expect("requested column").to_vec();
    let cfg = match config {
        Some(c) => c,
        None => GridSolverConfig::auto(&amp, &scenario.params, &scenario.times)?,
    };
    let run = evolve_conditional(&amp, &scenario.params, &cfg, &scenario.times)?;
    let peak = spectral_pi.iter().cloned().fold(0.0, f64::max);
    let sup = run.pi.iter().zip(&spectral_pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let sup_rel = if peak > 0.0 { sup / peak } else { sup };
    Ok(OracleComparison {
        run,
        spectral_pi,
        sup_rel,
        tolerance: ORACLE_TOLERANCE,
        passed: sup_rel <= ORACLE_TOLERANCE,
    })
}

pub fn oracle_csv(cmp: &OracleComparison) -> String {
    let mut s = String::from("t_s,Pi_spectral,Pi_grid,N_grid\n");
    for i in 0..cmp.run.grid.len {
        let _ = writeln!(
            s,
            "{:.11e},{:.11e},{:.11e},{:.11e}",
            cmp.run.grid.at(i),
            cmp.spectral_pi[i],
            cmp.run.pi[i],
            cmp.run.norm[i]
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
preset = "cesium"
omega_over_gamma = 0.66
outputs = ["Pi", "Pi_K"]

[time]
t_start = -100.0
t_end = 100.0
n = 11

[momentum]
nodes = 64

[[packet]]
v_mean = 2.0
dv = 0.48
"#;

    #[test]
    fn parses_minimal_file() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.outputs, vec![Distribution::Pi, Distribution::PiK]);
        assert_eq!(s.policy.nodes, 64);
        assert_eq!(s.model, Model::TwoChannel);
        assert!((s.times.start + 100e-6).abs() < 1e-18);
    }

    #[test]
    fn rejects_inconsistent_outputs() {
        let empty = MINIMAL.replace(r#"outputs = ["Pi", "Pi_K"]"#, "outputs = []");
        assert!(matches!(Scenario::from_toml(&empty), Err(Error::Validation { field, .. }) if field == "outputs"));
        let id = MINIMAL.replace(r#"outputs = ["Pi", "Pi_K"]"#, r#"outputs = ["Pi_id"]"#);
        assert!(matches!(Scenario::from_toml(&id), Err(Error::Validation { .. })));
        let unknown = MINIMAL.replace("preset", "presett");
        assert!(matches!(Scenario::from_toml(&unknown), Err(Error::Parse(_))));
    }

    #[test]
    fn csv_layout() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let s = DistributionSeries::single(g, Distribution::PiK, vec![0.5, 0.25]);
        assert_eq!(csv_string(&s), "t_s,Pi_K\n0.00000000000e0,5.00000000000e-1\n1.00000000000e0,2.50000000000e-1\n");
    }
}
