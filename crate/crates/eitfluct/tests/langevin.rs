use std::f64::consts::PI;

use approx::assert_relative_eq;
use eitfluct::closed_form;
use eitfluct::langevin::{
    self, atomic_basis, cross_spectrum, diffusion_matrix, hamiltonian, input_covariance, lindblad_operators,
    pair_covariance, quadrature_correlation, quadrature_spectrum, steady_state, susceptibility, Branch,
    LangevinModel, Mat4, Op,
};
use eitfluct::medium::{Field, FieldConfig, InputNoise, MediumParams, NoiseValues};
use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use proptest::prelude::*;

fn medium(gamma12: f64) -> MediumParams {
    MediumParams {
        gamma12,
        ..MediumParams::doppler_reference()
    }
}

fn fields(d1: f64, d2: f64, a1: f64, a2: f64) -> FieldConfig {
    FieldConfig {
        delta1: d1,
        delta2: d2,
        alpha1: a1,
        alpha2: a2,
    }
}

/// Brute-force steady state: the Schrödinger-picture Liouvillian on the
/// 9-dimensional space of density matrices, one equation replaced by the
/// trace condition.
fn liouvillian_steady_state(m: &MediumParams, f: &FieldConfig) -> Op {
    let h = hamiltonian(m, f);
    let ls = lindblad_operators(m);
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let mut l = DMatrix::<Complex64>::zeros(9, 9);
    // Row-major vec: vec(A ρ B) = (A ⊗ Bᵀ) vec ρ.
    let add = |l: &mut DMatrix<Complex64>, a: &Op, b: &Op, c: Complex64| {
        for r in 0..3 {
            for s in 0..3 {
                for p in 0..3 {
                    for q in 0..3 {
                        l[(3 * r + s, 3 * p + q)] += c * a[(r, p)] * b[(q, s)];
                    }
                }
            }
        }
    };
    let id = Op::identity();
    add(&mut l, &h, &id, -i);
    add(&mut l, &id, &h, i);
    for op in &ls {
        let ldl = op.adjoint() * op;
        add(&mut l, op, &op.adjoint(), one);
        add(&mut l, &ldl, &id, -0.5 * one);
        add(&mut l, &id, &ldl, -0.5 * one);
    }
    let mut rhs = DVector::<Complex64>::zeros(9);
    for col in 0..9 {
        l[(0, col)] = if col % 4 == 0 { one } else { Complex64::new(0.0, 0.0) };
    }
    rhs[0] = one;
    let x = l.lu().solve(&rhs).expect("Liouvillian with trace row is regular");
    Op::from_row_slice(x.as_slice())
}

#[test]
fn steady_state_matches_liouvillian_null_space() {
    let cases = [
        (medium(0.01), fields(0.0, 0.0, 10.0, 10.0)),
        (medium(0.01), fields(0.4, -0.3, 10.0, 5.0)),
        (medium(0.2), fields(1.5, 1.0, 3.0, 12.0)),
        (MediumParams { gamma1: 0.3, gamma2: 0.7, ..medium(0.05) }, fields(-0.7, 0.2, 8.0, 4.0)),
    ];
    for (m, f) in cases {
        let ss = steady_state(&m, &f).unwrap();
        let oracle = liouvillian_steady_state(&m, &f);
        assert!((ss.density_matrix() - oracle).norm() < 1e-12, "{:?}", f);
    }
}

#[test]
fn dark_state_on_two_photon_resonance() {
    let m = medium(0.0);
    let f = fields(0.7, 0.7, 10.0, 6.0);
    let ss = steady_state(&m, &f).unwrap();
    assert!(ss.sigma_1e().norm() < 1e-12);
    assert!(ss.sigma_2e().norm() < 1e-12);
    let (_, _, pe) = ss.populations();
    assert!(pe.abs() < 1e-12);
    let (o1, o2) = (f.omega1(&m), f.omega2(&m));
    assert_relative_eq!(ss.sigma_21().norm(), o1 * o2 / (o1 * o1 + o2 * o2), epsilon = 1e-12);
}

#[test]
fn optical_pumping_without_probe() {
    let m = medium(0.0);
    let ss = steady_state(&m, &fields(0.3, 0.0, 10.0, 0.0)).unwrap();
    let (p1, p2, pe) = ss.populations();
    assert!(p1.abs() < 1e-12 && pe.abs() < 1e-12);
    assert_relative_eq!(p2, 1.0, epsilon = 1e-12);
    assert!(ss.sigma_21().norm() < 1e-12);
}

#[test]
fn all_rates_zero_is_singular() {
    let m = MediumParams {
        gamma1: 0.0,
        gamma2: 0.0,
        ..medium(0.0)
    };
    assert!(steady_state(&m, &fields(0.0, 0.0, 10.0, 10.0)).is_err());
}

/// Independent form of the Einstein relation for Lindblad dissipation:
/// `D_xy = Σ_L ⟨[L†, x][y, L]⟩`.
fn einstein_oracle(rho: &Op, ls: &[Op], x: &Op, y: &Op) -> Complex64 {
    ls.iter()
        .map(|l| {
            let ld = l.adjoint();
            (rho * ((ld * x - x * ld) * (y * l - l * y))).trace()
        })
        .sum()
}

#[test]
fn diffusion_matches_einstein_oracle() {
    for (m, f) in [
        (medium(0.0), fields(0.3, 0.0, 10.0, 0.0)),
        (medium(0.05), fields(0.2, -0.4, 9.0, 6.0)),
        (MediumParams { gamma1: 0.8, gamma2: 0.2, ..medium(0.1) }, fields(1.0, 1.0, 4.0, 11.0)),
    ] {
        let ss = steady_state(&m, &f).unwrap();
        let d = diffusion_matrix(&ss, &m).unwrap();
        let rho = ss.density_matrix();
        let ls = lindblad_operators(&m);
        let basis = atomic_basis();
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let want = einstein_oracle(&rho, &ls, x, y);
                assert!((d.d[(i, j)] - want).norm() < 1e-13, "D[{i},{j}]");
            }
        }
    }
}

#[test]
fn two_level_diffusion_with_pump_only() {
    // With Ω2 = 0 the atoms are pumped into |2⟩. Both decay channels then
    // feed noise into the normally ordered probe dipole product:
    // D(σ2e, σe2) = γ1⟨σ22⟩ + γ2⟨σ22 + σee⟩ = γ, while D(σe2, σ2e) = 0.
    let m = medium(0.0);
    let ss = steady_state(&m, &fields(0.0, 0.0, 10.0, 0.0)).unwrap();
    let d = diffusion_matrix(&ss, &m).unwrap();
    assert_relative_eq!(d.d[(2, 3)].re, m.gamma(), epsilon = 1e-12);
    assert!(d.d[(3, 2)].norm() < 1e-12);
}

#[test]
fn no_dissipation_gives_zero_diffusion() {
    let m = MediumParams {
        gamma1: 0.0,
        gamma2: 0.0,
        ..medium(0.0)
    };
    // Any state will do: the Einstein relation only involves the dissipator.
    let ss = steady_state(&medium(0.0), &fields(0.0, 0.0, 10.0, 10.0)).unwrap();
    assert_eq!(diffusion_matrix(&ss, &m).unwrap().d.norm(), 0.0);
}

#[test]
fn transfer_at_zero_distance_is_identity() {
    let model = LangevinModel::new(&medium(0.0), &fields(0.5, 0.5, 10.0, 10.0)).unwrap();
    let t = model.transfer(0.0, 0.4).unwrap();
    assert!((t.forward - Mat4::identity()).norm() < 1e-15);
    assert!((t.backward - Mat4::identity()).norm() < 1e-15);
    assert!(t.noise.norm() < 1e-15);
}

fn assert_spectrum_matches_q(lambdas: &[Complex64], qs: &[Complex64]) {
    // Eigenvalues are i·conj(Q) for the coupled modes and 0 otherwise; the
    // decaying sign is fixed by Q^(i) ≤ 0.
    let mut used = vec![false; lambdas.len()];
    for q in qs {
        let want = Complex64::i() * q.conj();
        let k = (0..lambdas.len())
            .filter(|k| !used[*k])
            .min_by(|a, b| (lambdas[*a] - want).norm().total_cmp(&(lambdas[*b] - want).norm()))
            .unwrap();
        assert!((lambdas[k] - want).norm() < 1e-10, "{} vs {}", lambdas[k], want);
        used[k] = true;
    }
    for (k, l) in lambdas.iter().enumerate() {
        if !used[k] {
            assert!(l.norm() < 1e-10, "uncoupled eigenvalue {l}");
        }
    }
}

#[test]
fn generator_eigenvalues_reproduce_propagation_coefficients() {
    let m = medium(0.0);
    for (delta, omega, a2) in [(0.0, 0.3, 7.0), (0.0, 1.7, 10.0), (0.5, 0.3, 7.0), (3.0, -0.8, 10.0)] {
        let f = FieldConfig::two_photon(delta, 10.0, a2);
        let model = LangevinModel::new(&m, &f).unwrap();
        let ev = Schur::new(model.generator(omega).unwrap()).eigenvalues().unwrap();
        let q = closed_form::q_detuned(omega, delta, &m, &f).unwrap();
        assert_spectrum_matches_q(ev.as_slice(), &[q.plus, q.minus]);
    }
}

#[test]
fn cross_spectrum_reduces_to_spectrum() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
    let inputs = InputNoise::squeezed_probe(1.0);
    for (z, omega, theta) in [(1.3, 0.2, 0.0), (7.0, 1.1, 0.9)] {
        let direct = langevin::spectrum(z, omega, theta, Field::Probe, &inputs, &m, &f.with_detuning(0.5)).unwrap();
        let cross = cross_spectrum(theta, omega, 0.5, 0.5, z, Field::Probe, &inputs, &m, &f).unwrap();
        assert_eq!(direct, cross);
        let closed = closed_form::spectrum_detuned(z, omega, theta, Field::Probe, &inputs, &m, &f.with_detuning(0.5)).unwrap();
        assert_relative_eq!(cross, closed, max_relative = 1e-10);
    }
}

#[test]
fn cross_spectrum_at_entrance_is_input_spectrum() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
    let inputs = InputNoise::squeezed_probe(1.0);
    for (d1, d2) in [(0.0, 0.0), (0.3, -0.2), (1.0, 2.5)] {
        let s = cross_spectrum(0.4, 0.3, d1, d2, 0.0, Field::Probe, &inputs, &m, &f).unwrap();
        assert_relative_eq!(s, inputs.initial_spectrum(Field::Probe, 0.3, 0.4), max_relative = 1e-14);
    }
}

#[test]
fn pair_covariance_of_identical_branches_is_full_covariance() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.7, 10.0, 6.0);
    let model = LangevinModel::new(&m, &f).unwrap();
    let n = NoiseValues {
        f1: 0.3,
        g1: -0.2,
        f2: 1.4,
        g2: -1.1,
    };
    let b = Branch { model: &model, omega: 0.25 };
    let pair = pair_covariance(b, b, 4.0, &input_covariance(&n)).unwrap();
    let full = model.covariance(4.0, 0.25, &n).unwrap();
    assert!((pair - full).norm() < 1e-12);
}

#[test]
fn susceptibility_vanishes_on_two_photon_resonance() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
    for d1 in [0.0, 1.0] {
        let scan: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
        let chi = susceptibility(&scan, d1, &m, &f).unwrap();
        let peak = chi.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let at = susceptibility(&[d1], d1, &m, &f).unwrap()[0];
        assert!(at.im.abs() < 1e-10 * peak, "δ1 = {d1}: {at}");
        assert!(chi.iter().all(|c| c.im > -1e-12 * peak), "absorption is non-negative");
    }
}

#[test]
fn resonant_susceptibility_is_symmetric_with_autler_townes_doublet() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
    let scan: Vec<f64> = (0..=600).map(|i| 0.005 * i as f64).collect();
    let neg: Vec<f64> = scan.iter().map(|d| -d).collect();
    let plus = susceptibility(&scan, 0.0, &m, &f).unwrap();
    let minus = susceptibility(&neg, 0.0, &m, &f).unwrap();
    for (p, q) in plus.iter().zip(&minus) {
        assert!((p.im - q.im).abs() <= 1e-10 * p.im.abs().max(1e-300));
    }
    let (k, _) = plus
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.im.total_cmp(&b.1.im))
        .unwrap();
    // Both fields are strong, so the doublet is set by the total Rabi
    // frequency Ω = sqrt(Ω1² + Ω2²).
    let (split, big_omega) = (scan[k], f.omega(&m));
    assert!(split > 0.5 * big_omega && split < 1.5 * big_omega, "absorption maximum at δ2 = {split}");
}

#[test]
fn weak_pump_susceptibility_is_two_level_lorentzian() {
    let m = medium(0.0);
    let f = FieldConfig::two_photon(0.0, 0.1, 0.0);
    let scan = [0.3, 0.5, 0.8, 1.2, 2.0, -0.6];
    let chi = susceptibility(&scan, 0.0, &m, &f).unwrap();
    let half = m.gamma() / 2.0;
    let reference = chi[0].im * (scan[0] * scan[0] + half * half);
    for (d, c) in scan.iter().zip(&chi) {
        assert!(c.im > 0.0);
        assert_relative_eq!(c.im * (d * d + half * half), reference, max_relative = 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn populations_are_physical(
        d1 in -3.0..3.0f64,
        d2 in -3.0..3.0f64,
        ratio in 0.1..10.0f64,
        gamma12 in 0.0..0.5f64,
    ) {
        let m = medium(gamma12);
        let f = fields(d1, d2, 10.0, 10.0 / ratio);
        let (p1, p2, pe) = steady_state(&m, &f).unwrap().populations();
        for p in [p1, p2, pe] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        }
        prop_assert!((p1 + p2 + pe - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_is_a_fixed_point(
        z in 0.0..200.0f64,
        omega in -3.0..3.0f64,
        theta in 0.0..PI,
        delta in -3.0..3.0f64,
        a2 in 0.0..15.0f64,
    ) {
        let m = medium(0.0);
        let f = FieldConfig::two_photon(delta, 10.0, a2);
        let cov = LangevinModel::new(&m, &f).unwrap().covariance(z, omega, &NoiseValues::default()).unwrap();
        prop_assert!((quadrature_spectrum(&cov, Field::Pump, theta) - 1.0).abs() < 1e-8);
        prop_assert!((quadrature_spectrum(&cov, Field::Probe, theta) - 1.0).abs() < 1e-8);
        prop_assert!(quadrature_correlation(&cov, theta, 0.3).norm() < 1e-8);
    }

    #[test]
    fn transfer_is_a_semigroup(
        u1 in 0.0..10.0f64,
        u2 in 0.0..10.0f64,
        omega in 0.05..2.0f64,
        delta in 0.0..3.0f64,
    ) {
        let m = medium(0.0);
        let f = FieldConfig::two_photon(delta, 10.0, 10.0);
        let model = LangevinModel::new(&m, &f).unwrap();
        let d = closed_form::diagnostics(omega, delta, &m, &f).unwrap();
        let (z1, z2) = (u1 * d.z_abs, u2 * d.z_abs);
        let (t1, t2, t12) = (
            model.transfer(z1, omega).unwrap(),
            model.transfer(z2, omega).unwrap(),
            model.transfer(z1 + z2, omega).unwrap(),
        );
        prop_assert!((t12.forward - t2.forward * t1.forward).norm() < 1e-10);
        prop_assert!((t12.backward - t2.backward * t1.backward).norm() < 1e-10);
        let composed = t2.forward * t1.noise * t2.backward.transpose() + t2.noise;
        prop_assert!((t12.noise - composed).norm() < 1e-10);
    }

    #[test]
    fn output_spectra_are_positive(
        z in 0.0..50.0f64,
        omega in -2.0..2.0f64,
        theta in 0.0..PI,
        xi in 0.0..2.0f64,
        gamma12 in 0.0..0.2f64,
    ) {
        let m = medium(gamma12);
        let f = FieldConfig::two_photon(0.0, 10.0, 10.0);
        let cov = LangevinModel::new(&m, &f).unwrap().covariance(z, omega, &InputNoise::squeezed_probe(xi).at(omega)).unwrap();
        prop_assert!(quadrature_spectrum(&cov, Field::Pump, theta) > 0.0);
        prop_assert!(quadrature_spectrum(&cov, Field::Probe, theta) > 0.0);
    }
}
