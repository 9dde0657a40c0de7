use arrival_core::kernels::evaluate;
use arrival_core::oracle::{evolve_conditional, layer_reflection, GridSolverConfig, REFLECTION_LIMIT};
use arrival_core::packets::{build_amplitude, GridPolicy};
use arrival_core::params::units::{CM_PER_S, MICROSECOND};
use arrival_core::{
    Complex64, Distribution, GaussianComponent, MomentumAmplitude, OverlapKernel, PacketSpec, PhysicalParams, TimeGrid,
    Width,
};

fn setup() -> (PhysicalParams, MomentumAmplitude, TimeGrid) {
    let params = PhysicalParams::cesium(0.66).unwrap();
    let spec = PacketSpec::single(GaussianComponent::new(
        Complex64::new(1.0, 0.0),
        2.0 * CM_PER_S,
        Width::Velocity(0.48 * CM_PER_S),
        0.0,
        0.0,
    ))
    .unwrap();
    let amp = build_amplitude(&spec, &params, &GridPolicy::with_nodes(512)).unwrap();
    let times = TimeGrid::new(-40.0 * MICROSECOND, 30.0 * MICROSECOND, 71).unwrap();
    (params, amp, times)
}

fn spectral_pi(params: &PhysicalParams, amp: &MomentumAmplitude, times: &TimeGrid) -> Vec<f64> {
    let kernel = OverlapKernel::two_channel(params, &amp.grid).unwrap();
    let s = evaluate(amp, Some(&kernel), times, &[Distribution::Pi]).unwrap();
    s.get(Distribution::Pi).unwrap().to_vec()
}

fn sup_rel(a: &[f64], reference: &[f64]) -> f64 {
    let peak = reference.iter().cloned().fold(0.0, f64::max);
    a.iter().zip(reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak
}

#[test]
fn crank_nicolson_error_falls_at_second_order() {
    let (params, amp, times) = setup();
    let reference = spectral_pi(&params, &amp, &times);
    let base = GridSolverConfig::auto(&amp, &params, &times).unwrap();
    let coarse = evolve_conditional(&amp, &params, &base.refined(0.25), &times).unwrap();
    let fine = evolve_conditional(&amp, &params, &base.refined(0.5), &times).unwrap();
    let e_coarse = sup_rel(&coarse.pi, &reference);
    let e_fine = sup_rel(&fine.pi, &reference);
    let ratio = e_coarse / e_fine;
    assert!((2.5..=6.0).contains(&ratio), "errors {e_coarse:.3e} -> {e_fine:.3e}, ratio {ratio:.2}");
}

#[test]
fn conditional_norm_never_grows_and_matches_detection() {
    let (params, amp, times) = setup();
    let cfg = GridSolverConfig::auto(&amp, &params, &times).unwrap().refined(0.5);
    let run = evolve_conditional(&amp, &params, &cfg, &times).unwrap();
    assert!(run.norm.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    // The norm lost between samples equals the spectral Π integrated on a
    // finer grid.
    let sub = 20;
    let mut worst: f64 = 0.0;
    let mut largest: f64 = 0.0;
    let kernel = OverlapKernel::two_channel(&params, &amp.grid).unwrap();
    for i in 0..times.len - 1 {
        let fine = TimeGrid::new(times.at(i), times.at(i + 1), sub + 1).unwrap();
        let s = evaluate(&amp, Some(&kernel), &fine, &[Distribution::Pi]).unwrap();
        let detected = s.integral(Distribution::Pi).unwrap();
        let lost = run.norm[i] - run.norm[i + 1];
        worst = worst.max((lost - detected).abs());
        largest = largest.max(detected);
    }
    assert!(worst <= 5e-3 * largest, "max mismatch {worst:.3e} of {largest:.3e}");
}

#[test]
fn automatic_layers_reflect_below_the_limit() {
    let (params, amp, times) = setup();
    let cfg = GridSolverConfig::auto(&amp, &params, &times).unwrap();
    let r = layer_reflection(&amp, &params, &cfg, times.end() - cfg.t0).unwrap();
    assert!(r <= REFLECTION_LIMIT, "reflection {r:.2e}");

    // A layer a tenth as strong lets the wave bounce off the grid end.
    let mut weak = cfg;
    weak.layer_strength /= 10.0;
    let r_weak = layer_reflection(&amp, &params, &weak, times.end() - cfg.t0).unwrap();
    assert!(r_weak > REFLECTION_LIMIT, "weak layer {r_weak:.2e}");
}
