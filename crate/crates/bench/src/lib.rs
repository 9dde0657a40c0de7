//! Fixtures shared by the benchmarks.

use arrival_core::packets::{build_amplitude, GridPolicy};
use arrival_core::params::units::{CM_PER_S, MICROMETRE, MICROSECOND};
use arrival_core::{Complex64, GaussianComponent, MomentumAmplitude, PacketSpec, PhysicalParams, TimeGrid, Width};

/// Two-peak cesium packet at Ω = 500γ with `nodes` momentum nodes.
pub fn two_peak(nodes: usize) -> (PhysicalParams, MomentumAmplitude) {
    let params = PhysicalParams::cesium(500.0).expect("valid parameters");
    let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let dx = Width::Position(0.031 * MICROMETRE);
    let spec = PacketSpec::new(vec![
        GaussianComponent::new(w, 18.96 * CM_PER_S, dx, 0.0, 2.0 * MICROSECOND),
        GaussianComponent::new(w, 5.42 * CM_PER_S, dx, 0.0, 2.0 * MICROSECOND),
    ])
    .expect("valid packet");
    let amp = build_amplitude(&spec, &params, &GridPolicy::with_nodes(nodes)).expect("amplitude");
    (params, amp)
}

/// `n` output times over the arrival window of [`two_peak`].
pub fn two_peak_times(n: usize) -> TimeGrid {
    TimeGrid::new(-6.0 * MICROSECOND, 14.0 * MICROSECOND, n).expect("valid grid")
}
