use arrival_core::cpot::CpotParams;
use arrival_core::kernels::{evaluate, HermitianKernel};
use arrival_core::packets::{build_amplitude, GridPolicy};
use arrival_core::params::units::{CM_PER_S, MICROMETRE};
use arrival_core::scattering::{one_channel_coefficients, two_channel_coefficients};
use arrival_core::{
    CesiumDefaults, Complex64, Distribution, GaussianComponent, MomentumGrid, OverlapKernel, PacketSpec,
    PhysicalParams, TimeGrid, Width,
};
use proptest::prelude::*;

fn params(gamma_cs: f64, ratio: f64) -> PhysicalParams {
    let g = gamma_cs * CesiumDefaults::GAMMA;
    PhysicalParams::new(g, ratio * g, CesiumDefaults::MASS).unwrap()
}

/// Ω/γ away from the degenerate point 1/2.
fn ratio() -> impl Strategy<Value = f64> {
    (0.01f64..3.0).prop_filter("degenerate eigenvalues", |r| (r - 0.5).abs() > 0.01)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn two_channel_state_is_physical(g in 0.1f64..100.0, r in ratio(), v in 0.05f64..40.0) {
        let p = params(g, r);
        let c = two_channel_coefficients(&p, p.velocity_to_wavenumber(v * CM_PER_S)).unwrap();
        prop_assert!(c.q.im > 0.0);
        prop_assert!(c.k_plus.im > 0.0 && c.k_minus.im > 0.0);
        prop_assert!(c.r1.norm() < 1.0);
        let detected = c.detection_probability();
        prop_assert!(detected > 0.0 && detected <= 1.0);
        prop_assert!(c.matching_residual() < 1e-9);
    }

    #[test]
    fn absorber_state_is_physical(v0_scale in -3.0f64..3.0, v in 0.05f64..40.0) {
        let p = params(1.0, 0.5);
        let cp = CpotParams::from_physical(&p).unwrap().scaled(10f64.powf(v0_scale)).unwrap();
        let c = one_channel_coefficients(&cp, p.velocity_to_wavenumber(v * CM_PER_S)).unwrap();
        prop_assert!(c.kappa.im > 0.0);
        prop_assert!(c.r.norm() < 1.0);
        // Value and slope match at the absorber edge.
        let one = Complex64::new(1.0, 0.0);
        prop_assert!((one + c.r - c.t).norm() < 1e-12);
        prop_assert!((c.k * (one - c.r) - c.kappa * c.t).norm() < 1e-12 * c.kappa.norm());
    }

    #[test]
    fn kernel_is_hermitian_with_nonnegative_diagonal(
        g in 0.5f64..50.0,
        r in ratio(),
        k in proptest::collection::vec(0.1f64..30.0, 2..12),
    ) {
        let p = params(g, r);
        let nodes: Vec<f64> = k.iter().map(|v| p.velocity_to_wavenumber(v * CM_PER_S)).collect();
        let grid = MomentumGrid { weights: vec![1.0; nodes.len()], nodes };
        let kernel = OverlapKernel::two_channel(&p, &grid).unwrap();
        for j in 0..kernel.len() {
            prop_assert!(kernel.entry(j, j).re >= 0.0);
            for l in 0..kernel.len() {
                let a = kernel.entry(j, l);
                let b = kernel.entry(l, j).conj();
                prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
                // Cauchy–Schwarz for a Gram matrix.
                prop_assert!(a.norm_sqr() <= kernel.entry(j, j).re * kernel.entry(l, l).re * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn first_photon_density_is_nonnegative(
        g in 0.5f64..50.0,
        r in ratio(),
        v in 1.0f64..20.0,
        dx in 0.05f64..0.4,
    ) {
        let p = params(g, r);
        let spec = PacketSpec::single(GaussianComponent::new(
            Complex64::new(1.0, 0.0), v * CM_PER_S, Width::Position(dx * MICROMETRE), 0.0, 0.0,
        )).unwrap();
        let amp = match build_amplitude(&spec, &p, &GridPolicy::with_nodes(64)) {
            Ok(a) => a,
            Err(_) => return Ok(()),
        };
        let kernel = OverlapKernel::two_channel(&p, &amp.grid).unwrap();
        let passage = dx * MICROMETRE / (v * CM_PER_S);
        let times = TimeGrid::new(-5.0 * passage, 10.0 * passage, 101).unwrap();
        let s = evaluate(&amp, Some(&kernel), &times, &[Distribution::Pi, Distribution::PiOn, Distribution::PiK]).unwrap();
        for d in [Distribution::Pi, Distribution::PiOn, Distribution::PiK] {
            let col = s.get(d).unwrap();
            let peak = col.iter().cloned().fold(0.0, f64::max);
            prop_assert!(col.iter().all(|&x| x >= -1e-10 * peak), "{d} negative");
        }
    }
}
