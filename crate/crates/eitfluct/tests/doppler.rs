use std::f64::consts::FRAC_PI_2;

use approx::assert_relative_eq;
use eitfluct::doppler::{doppler_curve, doppler_spectrum, doppler_sweep, velocity_nodes, DopplerConfig, WidthConvention};
use eitfluct::langevin::{self, input_covariance, pair_covariance, quadrature_spectrum, Branch, LangevinModel};
use eitfluct::medium::{Field, FieldConfig, InputNoise, MediumParams};
use proptest::prelude::*;

fn medium() -> MediumParams {
    MediumParams::doppler_reference()
}

/// Squeezed-vacuum probe, strong pump.
fn vacuum_probe() -> (FieldConfig, InputNoise) {
    (FieldConfig::two_photon(0.0, 10.0, 0.0), InputNoise::squeezed_probe(2.0))
}

/// Equal mean amplitudes, squeezed probe.
fn equal_fields() -> (FieldConfig, InputNoise) {
    (FieldConfig::two_photon(0.0, 10.0, 10.0), InputNoise::squeezed_probe(2.0))
}

/// Explicit double sum over velocity-class pairs of the genuine
/// cross-spectrum, each class evaluated at its own shifted frequency.
fn double_sum(z: f64, theta: f64, omega: f64, field: Field, sigma: f64, order: usize, panels: usize) -> f64 {
    let (f, inputs) = equal_fields();
    let m = medium();
    let nodes = velocity_nodes(sigma, order, panels, 5.0).unwrap();
    let models: Vec<LangevinModel> = nodes
        .detunings
        .iter()
        .map(|&d| LangevinModel::new(&m, &f.with_detuning(d)).unwrap())
        .collect();
    let c0 = input_covariance(&inputs.at(omega));
    let mut total = 0.0;
    for (i, mi) in models.iter().enumerate() {
        for (j, mj) in models.iter().enumerate() {
            let cov = pair_covariance(
                Branch {
                    model: mi,
                    omega: omega - nodes.detunings[i],
                },
                Branch {
                    model: mj,
                    omega: omega - nodes.detunings[j],
                },
                z,
                &c0,
            )
            .unwrap();
            total += nodes.weights[i] * nodes.weights[j] * quadrature_spectrum(&cov, field, theta);
        }
    }
    total
}

#[test]
fn zero_width_is_the_unaveraged_spectrum() {
    let m = medium();
    let (f, inputs) = equal_fields();
    let zs = [0.0, 0.5, 3.0, 20.0, 80.0];
    let curve = doppler_curve(&zs, 0.3, 0.1, &inputs, &m, &f, &DopplerConfig::new(0.0, 32).unwrap()).unwrap();
    assert_eq!(curve.panels, 0);
    for (k, &z) in zs.iter().enumerate() {
        for field in [Field::Pump, Field::Probe] {
            let exact = langevin::spectrum(z, 0.1, 0.3, field, &inputs, &m, &f).unwrap();
            assert_eq!(curve.field(field)[k], exact);
        }
    }
}

#[test]
fn average_matches_an_explicit_double_sum() {
    let m = medium();
    let (f, inputs) = equal_fields();
    let (sigma, omega) = (0.1, 0.1);
    let d = DopplerConfig::new(sigma, 16).unwrap();
    for z in [0.5, 2.0, 6.0] {
        for (theta, field) in [(0.0, Field::Probe), (0.0, Field::Pump), (FRAC_PI_2, Field::Probe)] {
            let (avg, warnings) = doppler_spectrum(z, theta, omega, field, &inputs, &m, &f, &d).unwrap();
            assert!(warnings.is_empty(), "{warnings:?}");
            let reference = double_sum(z, theta, omega, field, sigma, 8, 4);
            assert_relative_eq!(avg, reference, max_relative = 1e-6);
        }
    }
}

#[test]
fn average_is_even_in_the_class_detuning() {
    // Reflecting every class δ → −δ together with ω → −ω maps the
    // generators onto their mirror images; the Gaussian is even, so the
    // averaged spectrum of a centred distribution is unchanged.
    let m = medium();
    let (f, inputs) = equal_fields();
    let d = DopplerConfig::new(0.25, 16).unwrap();
    let zs = [1.0, 4.0, 15.0];
    let plus = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &d).unwrap();
    let minus = doppler_curve(&zs, 0.0, -0.1, &inputs, &m, &f, &d).unwrap();
    for k in 0..zs.len() {
        assert_relative_eq!(plus.probe[k], minus.probe[k], max_relative = 1e-8);
        assert_relative_eq!(plus.pump[k], minus.pump[k], max_relative = 1e-8);
    }
}

#[test]
#[ignore = "does not hold for independent class pairs with the ω → ω − δ substitution: at Δδ = 20 the probe reaches S ≈ 4.2 at z = 20"]
fn very_wide_distributions_scramble_towards_vacuum_at_fixed_distance() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let zs = [20.0, 50.0];
    let curve = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(20.0, 32).unwrap()).unwrap();
    for s in curve.probe.iter().chain(&curve.pump) {
        assert!((s - 1.0).abs() < 1e-2, "{s}");
    }
}

#[test]
fn wide_distributions_relax_to_vacuum_far_into_the_medium() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let zs = [1000.0, 5000.0];
    let curve = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(20.0, 32).unwrap()).unwrap();
    for s in curve.probe.iter().chain(&curve.pump) {
        assert!((s - 1.0).abs() < 1e-3, "{s}");
    }
}

#[test]
fn variance_convention_matches_the_equivalent_deviation() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let zs = [2.0, 10.0];
    let std = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(0.25, 16).unwrap()).unwrap();
    let var = DopplerConfig {
        convention: WidthConvention::Variance,
        ..DopplerConfig::new(0.0625, 16).unwrap()
    };
    let by_var = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &var).unwrap();
    assert_eq!(std.probe, by_var.probe);
}

#[test]
fn quadrature_order_doubling_is_converged() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let zs: Vec<f64> = (0..=20).map(|i| 5.0 * i as f64).collect();
    for width in [0.1, 0.5] {
        let c32 = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(width, 32).unwrap()).unwrap();
        let c64 = doppler_curve(&zs, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(width, 64).unwrap()).unwrap();
        assert!(c32.warnings.is_empty(), "{:?}", c32.warnings);
        for (a, b) in c32.probe.iter().zip(&c64.probe) {
            assert!((a - b).abs() < 1e-3 * b.abs());
        }
    }
}

#[test]
fn sweep_produces_one_curve_per_width_with_growing_degradation() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let widths = [0.01, 0.1, 0.25, 0.5];
    let zs = [1.0, 2.0];
    let curves = doppler_sweep(&zs, &widths, 0.0, 0.1, &inputs, &m, &f, &DopplerConfig::new(0.0, 16).unwrap()).unwrap();
    assert_eq!(curves.len(), 4);
    for (c, &w) in curves.iter().zip(&widths) {
        assert_eq!(c.delta_width, w);
    }
    for k in 0..zs.len() {
        assert!(curves.windows(2).all(|p| p[1].probe[k] >= p[0].probe[k]));
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let m = medium();
    let (f, inputs) = vacuum_probe();
    let d = DopplerConfig::new(0.1, 8).unwrap();
    assert!(doppler_curve(&[-1.0], 0.0, 0.1, &inputs, &m, &f, &d).is_err());
    let split = FieldConfig {
        delta1: 0.0,
        delta2: 1.0,
        ..f
    };
    assert!(doppler_curve(&[1.0], 0.0, 0.1, &inputs, &m, &split, &d).is_err());
    assert!(DopplerConfig::new(f64::NAN, 8).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn averaged_spectra_are_positive(
        width in 0.0f64..1.0,
        z in 0.0f64..100.0,
        theta in 0.0f64..std::f64::consts::PI,
        omega in -0.5f64..0.5,
    ) {
        let m = medium();
        let (f, inputs) = equal_fields();
        let curve = doppler_curve(&[z], theta, omega, &inputs, &m, &f, &DopplerConfig::new(width, 8).unwrap()).unwrap();
        prop_assert!(curve.probe[0] > 0.0 && curve.pump[0] > 0.0);
    }

    #[test]
    fn node_weights_are_normalised(sigma in 1e-3f64..5.0, order in 1usize..40, panels in 1usize..16) {
        let n = velocity_nodes(sigma, order, panels, 5.0).unwrap();
        prop_assert!((n.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(n.weights.iter().all(|w| *w >= 0.0));
    }
}
