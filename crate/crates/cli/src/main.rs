//! `arrival`: scenario runner for arrival-time distributions.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical degeneracy,
//! 4 oracle mismatch, 1 file-system error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arrival_core::asymptotics::Scaling;
use arrival_core::kernels::{HermitianKernel, Model};
use arrival_core::oracle::{dense_overlap_check, REFLECTION_LIMIT};
use arrival_core::params::units::MICROSECOND;
use arrival_core::scenario::{converge, converge_csv, coeffs_csv, oracle_compare, oracle_csv, run, write_run, Scenario};
use arrival_core::{Error, ErrorKind, OverlapKernel, TimeGrid};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ORACLE: u8 = 4;

/// Dense-quadrature entries must match the closed-form kernel to this relative accuracy.
const DENSE_TOLERANCE: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "arrival", version, about = "Quantum arrival-time distributions from laser fluorescence")]
struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario and write CSV, metadata JSON and a plot script.
    Run(RunArgs),
    /// Distance of Π^ON to Π_K along a γ scaling family.
    Converge(ConvergeArgs),
    /// Cross-check the spectral results against the grid solver and dense quadrature.
    Oracle(OracleArgs),
    /// Tabulate the two-channel scattering coefficients over the packet support.
    Coeffs(CoeffsArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    scenario: PathBuf,

    /// Override the model named in the scenario file.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,

    /// Output directory (default: print tables to stdout; `run` uses the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,

    /// Add the deconvolved distribution Pi_id (and Pi_ON).
    #[arg(long)]
    deconvolve: bool,

    /// Zero-padding factor for the deconvolution FFT.
    #[arg(long)]
    pad_factor: Option<usize>,

    /// Cosine taper fraction at each end before the deconvolution FFT.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,

    /// γ multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 3.0, 10.0, 30.0])]
    multipliers: Vec<f64>,

    /// How Ω follows γ.
    #[arg(long, value_enum, default_value_t = ScalingArg::FixedRatio)]
    scaling: ScalingArg,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,

    /// Replace the scenario time grid: start in µs.
    #[arg(long, allow_negative_numbers = true, requires_all = ["t_end", "points"])]
    t_start: Option<f64>,

    /// Replace the scenario time grid: end in µs.
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,

    /// Replace the scenario time grid: number of points.
    #[arg(long)]
    points: Option<usize>,

    /// Override the number of momentum nodes.
    #[arg(long)]
    nodes: Option<usize>,

    /// Number of kernel entries checked by dense quadrature.
    #[arg(long, default_value_t = 8)]
    dense_pairs: usize,
}

#[derive(Args)]
struct CoeffsArgs {
    #[command(flatten)]
    common: Common,

    /// Number of wavenumbers.
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    TwoChannel,
    ComplexPotential,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    /// Ω/γ fixed.
    FixedRatio,
    /// Ω²/γ fixed.
    FixedOmegaSqOverGamma,
}

enum Failure {
    Core(Error),
    OracleMismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Coeffs(a) => cmd_coeffs(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::OracleMismatch) => ExitCode::from(EXIT_ORACLE),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Io => EXIT_IO,
            })
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let mut s = Scenario::load(&common.scenario)?;
    if let Some(m) = common.model {
        s.model = match m {
            ModelArg::TwoChannel => Model::TwoChannel,
            ModelArg::ComplexPotential => Model::ComplexPotential,
        };
        if s.model == Model::TwoChannel && s.v0.is_some() {
            return Err(Error::validation("model", "v0 in the scenario requires the complex-potential model"));
        }
        s.check()?;
    }
    Ok(s)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

/// Write `table` to `<out>/<name>` or print it.
fn emit(out: Option<&Path>, name: String, table: &str) -> Result<(), Error> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, table)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut s = load(&a.common)?;
    if a.deconvolve {
        s.enable_deconvolution();
    }
    if let Some(p) = a.pad_factor {
        s.deconv.pad_factor = p;
    }
    if a.window.is_some() {
        s.deconv.window = a.window;
    }
    s.check()?;
    let result = run(&s)?;
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let files = write_run(&result, &dir, &stem(&a.common.scenario))?;
    for c in &result.metadata.checks {
        println!(
            "{:<32} {:>16.10} (target {} ± {:.0e}) {}",
            c.name,
            c.value,
            c.target,
            c.tolerance,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    for w in &result.metadata.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}\n{}\n{}", files.csv.display(), files.metadata.display(), files.plot.display());
    Ok(())
}

fn cmd_converge(a: ConvergeArgs) -> Result<(), Failure> {
    let s = load(&a.common)?;
    let scaling = match a.scaling {
        ScalingArg::FixedRatio => Scaling::FixedRatio,
        ScalingArg::FixedOmegaSqOverGamma => Scaling::FixedOmegaSqOverGamma,
    };
    let report = converge(&s, &a.multipliers, scaling)?;
    emit(a.common.out.as_deref(), format!("{}_converge.csv", stem(&a.common.scenario)), &converge_csv(&report))?;
    if !report.monotone {
        eprintln!("note: the L1 distance is not strictly decreasing along the family");
    }
    Ok(())
}

fn cmd_coeffs(a: CoeffsArgs) -> Result<(), Failure> {
    let s = load(&a.common)?;
    if s.model != Model::TwoChannel {
        return Err(Error::validation("model", "coefficient tables cover the two-channel model").into());
    }
    let table = coeffs_csv(&s, a.points)?;
    emit(a.common.out.as_deref(), format!("{}_coeffs.csv", stem(&a.common.scenario)), &table)?;
    Ok(())
}

struct Row {
    name: String,
    deviation: f64,
    limit: f64,
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Failure> {
    let mut s = load(&a.common)?;
    if let (Some(t0), Some(t1), Some(n)) = (a.t_start, a.t_end, a.points) {
        s.times = TimeGrid::new(t0 * MICROSECOND, t1 * MICROSECOND, n)?;
    }
    if let Some(n) = a.nodes {
        s.policy.nodes = n;
    }

    let cmp = oracle_compare(&s, None)?;
    let mut rows = vec![
        Row {
            name: "grid solver vs spectral Pi (sup rel)".into(),
            deviation: cmp.sup_rel,
            limit: cmp.tolerance,
        },
        Row {
            name: "absorbing-layer reflection".into(),
            deviation: cmp.run.layer_reflection,
            limit: REFLECTION_LIMIT,
        },
    ];
    let growth = cmp.run.norm.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    rows.push(Row {
        name: "norm growth between samples".into(),
        deviation: growth,
        limit: 1e-12,
    });

    // Node pairs spread across the grid.
    let amp = s.amplitude()?;
    let kernel = OverlapKernel::two_channel(&s.params, &amp.grid)?;
    let n = kernel.len();
    let mut worst: f64 = 0.0;
    for i in 0..a.dense_pairs {
        let j = i * (n - 1) / a.dense_pairs.max(1);
        let l = (n - 1) - (i * (n - 1) / (2 * a.dense_pairs.max(1)));
        let exact = kernel.entry(j, l);
        let dense = dense_overlap_check(&s.params, amp.grid.nodes[j], amp.grid.nodes[l])?;
        if exact.norm() > 0.0 {
            worst = worst.max((dense - exact).norm() / exact.norm());
        }
    }
    rows.push(Row {
        name: format!("dense quadrature, {} entries (max rel)", a.dense_pairs),
        deviation: worst,
        limit: DENSE_TOLERANCE,
    });

    println!("{:<44} {:>12} {:>10}  result", "check", "deviation", "limit");
    let mut all = true;
    for r in &rows {
        let ok = r.deviation <= r.limit;
        all &= ok;
        println!("{:<44} {:>12.3e} {:>10.1e}  {}", r.name, r.deviation, r.limit, if ok { "pass" } else { "FAIL" });
    }
    println!("grid: {} cells, {} steps", cmp.run.cells, cmp.run.steps);
    if let Some(dir) = a.common.out.as_deref() {
        emit(Some(dir), format!("{}_oracle.csv", stem(&a.common.scenario)), &oracle_csv(&cmp))?;
    }
    if all {
        Ok(())
    } else {
        Err(Failure::OracleMismatch)
    }
}
