use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arrival"))
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary starts")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const TWO_PEAK: &str = r#"
preset = "cesium"
omega_over_gamma = 500.0
outputs = [OUTPUTS]

[time]
t_start = T0
t_end = 14.0
n = 2001

[momentum]
nodes = 512

[[packet]]
weight_re = 0.70710678
v_mean = 18.96
dx = 0.031
t_min = 2.0

[[packet]]
weight_re = 0.70710678
v_mean = 5.42
dx = 0.031
t_min = 2.0
"#;

fn two_peak(outputs: &str, t0: &str) -> String {
    TWO_PEAK.replace("OUTPUTS", outputs).replace("T0", t0)
}

#[test]
fn run_writes_csv_metadata_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "peaks.scenario", &two_peak(r#""Pi", "Pi_K", "J""#, "-6.0"));
    let out = dir.path().join("out");
    let o = run(&["run", sc.to_str().unwrap(), "--deconvolve", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("peaks.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t_s,Pi,Pi_K,J,Pi_ON,Pi_id");
    assert_eq!(csv.lines().count(), 2002);

    let meta = fs::read_to_string(out.join("peaks.json")).unwrap();
    for key in ["\"version\"", "\"checks\"", "integral_Pi_ON", "hermiticity_residual", "\"gamma\""] {
        assert!(meta.contains(key), "metadata lacks {key}");
    }
    let plot = fs::read_to_string(out.join("peaks_plot.py")).unwrap();
    assert!(plot.contains("peaks.csv"));
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "peaks.scenario", &two_peak(r#""Pi", "Pi_ON", "Pi_K", "Pi_J""#, "-6.0"));
    let mut tables = Vec::new();
    for (i, threads) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = run(&["--threads", threads, "run", sc.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        tables.push(fs::read(out.join("peaks.csv")).unwrap());
    }
    assert!(tables.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn empty_outputs_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "empty.scenario", &two_peak("", "-6.0"));
    let o = run(&["run", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("outputs"));
}

#[test]
fn unknown_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = two_peak(r#""Pi""#, "-6.0").replace("preset", "omgea = 3\npreset");
    let sc = write(dir.path(), "typo.scenario", &text);
    let o = run(&["run", sc.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn truncated_window_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    // The distribution is still large at t = 2 µs, so the FFT would wrap around.
    let sc = write(dir.path(), "short.scenario", &two_peak(r#""Pi_ON", "Pi_id""#, "2.0"));
    let o = run(&["run", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("longer time grid"));
}

#[test]
fn deconvolution_is_refused_for_the_complex_potential_model() {
    let o = run(&["run", bundled("fig3.scenario").to_str().unwrap(), "--model", "complex-potential"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn converge_with_one_multiplier_gives_one_row() {
    let o = run(&["converge", bundled("fig2.scenario").to_str().unwrap(), "--multipliers", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma_multiplier,sup_dist,l1_dist");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("3.00000000000e0,"));
}

#[test]
fn converge_towards_the_absorber_model_reports_both_distances() {
    let o = run(&[
        "converge",
        bundled("fig2.scenario").to_str().unwrap(),
        "--scaling",
        "fixed-omega-sq-over-gamma",
        "--multipliers",
        "1,10,100",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    let model_l1: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(model_l1.len(), 3);
    assert!(model_l1.windows(2).all(|w| w[1] < w[0]), "{model_l1:?}");
}

#[test]
fn coeffs_table_has_all_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["coeffs", bundled("fig1.scenario").to_str().unwrap(), "--points", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("fig1_coeffs.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 13);
    for line in lines {
        let r1_re: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let r1_im: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(r1_re.hypot(r1_im) < 1.0);
    }
}

#[test]
fn oracle_passes_on_a_short_window() {
    let o = run(&[
        "oracle",
        bundled("fig1.scenario").to_str().unwrap(),
        "--t-start",
        "-40",
        "--t-end",
        "30",
        "--points",
        "71",
        "--nodes",
        "512",
    ]);
    let text = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(code(&o), 0, "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with("pass")).count(), 4);
}

#[test]
fn missing_file_exits_with_io_code() {
    let o = run(&["run", "/nonexistent/path.scenario"]);
    assert_eq!(code(&o), 1);
}
