use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use vnslab::particles::{sample_fluid, FluidInit};
use vnslab::spectral::{
    grad_sup_norm, heat_semigroup, leray_project, nonlinear_term, ns_step, read_field, sobolev_norm, write_field,
    FourierField, GridSpec, Scheme, SobolevSpec, VectorGrid,
};
use vnslab::Error;

fn physical(spec: GridSpec, f: impl Fn(&[f64; 3]) -> Vec<f64>) -> FourierField {
    let mut comps = vec![vec![0.0; spec.len()]; spec.d()];
    for i in 0..spec.len() {
        for (c, v) in f(&spec.node(i)).into_iter().enumerate() {
            comps[c][i] = v;
        }
    }
    FourierField::from_physical(&VectorGrid { spec, comps })
}

fn shear(spec: GridSpec, amplitude: f64) -> FourierField {
    let mut u = physical(spec, |x| {
        let mut v = vec![0.0; spec.d()];
        v[0] = amplitude * (2.0 * PI * x[1]).sin();
        v
    });
    u.set_div_free(true);
    u
}

fn max_coeff_diff(a: &FourierField, b: &FourierField) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .flat_map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

#[test]
fn grid_rejects_odd_or_tiny_sizes() {
    assert!(matches!(GridSpec::new(2, 7), Err(Error::InvalidGrid(_))));
    assert!(matches!(GridSpec::new(4, 16), Err(Error::InvalidGrid(_))));
    assert_eq!(GridSpec::new(2, 16).unwrap().cutoff(), 5);
}

#[test]
fn leray_annihilates_gradients() {
    let spec = GridSpec::new(2, 16).unwrap();
    // grad sin(2 pi x1) = (2 pi cos(2 pi x1), 0)
    let grad = physical(spec, |x| vec![2.0 * PI * (2.0 * PI * x[0]).cos(), 0.0]);
    let p = leray_project(&grad);
    assert!(p.l2_norm_sq() < 1e-26);
}

#[test]
fn leray_leaves_divergence_free_fields_unchanged() {
    let spec = GridSpec::new(3, 8).unwrap();
    let u = sample_fluid(&FluidInit::Random { h_half_norm: 1.0, kmax: 2 }, &spec, 4).unwrap();
    assert!(max_coeff_diff(&leray_project(&u), &u) < 1e-14);
}

#[test]
fn leray_single_mode_hand_value() {
    let spec = GridSpec::new(2, 8).unwrap();
    let mut u = FourierField::zeros(spec);
    let (a, b) = (Complex64::new(0.3, -0.1), Complex64::new(-0.7, 0.2));
    u.set_mode(&[1, 0], &[a, b]);
    let p = leray_project(&u);
    let m = p.mode(&[1, 0]);
    assert!(m[0].norm() < 1e-15);
    assert!((m[1] - b).norm() < 1e-15);
}

#[test]
fn sobolev_norm_examples() {
    let spec = GridSpec::new(2, 16).unwrap();
    assert_eq!(sobolev_norm(&FourierField::constant(spec, &[1.0, 2.0]), SobolevSpec::homogeneous(0.5)), 0.0);
    let u = shear(spec, 1.0);
    let h1 = sobolev_norm(&u, SobolevSpec::homogeneous(1.0)).powi(2);
    assert!((h1 - (2.0 * PI).powi(2) * u.l2_norm_sq()).abs() < 1e-10);

    // two modes: Parseval sum over the coefficient list
    let mut v = FourierField::zeros(spec);
    v.set_mode(&[1, 0], &[Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.1)]);
    v.set_mode(&[0, 2], &[Complex64::new(-0.3, 0.05), Complex64::new(0.0, 0.0)]);
    let s = 0.5;
    let mut oracle = 0.0;
    for (k, c) in [([1i64, 0i64], Complex64::new(0.2, 0.1)), ([0, 2], Complex64::new(-0.3, 0.05))] {
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        // each mode appears with its conjugate partner
        oracle += 2.0 * (1.0 + 4.0 * PI * PI * k2).powf(s) * c.norm_sqr();
    }
    let got = sobolev_norm(&v, SobolevSpec::inhomogeneous(s)).powi(2);
    assert!((got - oracle).abs() < 1e-13, "{got} vs {oracle}");
}

#[test]
fn heat_semigroup_examples() {
    let spec = GridSpec::new(2, 16).unwrap();
    let u = shear(spec, 0.8);
    assert_eq!(heat_semigroup(&u, 0.0), u);
    let h = heat_semigroup(&u, 0.1);
    let ratio = h.mode(&[0, 1])[0].norm() / u.mode(&[0, 1])[0].norm();
    assert!((ratio - (-(2.0 * PI).powi(2) * 0.1f64).exp()).abs() < 1e-15);
    assert!((ratio - 0.019296).abs() < 1e-6);
    let c = FourierField::constant(spec, &[0.4, -0.2]);
    assert_eq!(heat_semigroup(&c, 3.0), c);
}

#[test]
fn shear_flow_step_is_exact_heat_decay() {
    let spec = GridSpec::new(2, 16).unwrap();
    let u = shear(spec, 0.5);
    assert!(nonlinear_term(&u).l2_norm_sq() < 1e-28);
    for scheme in [Scheme::Lie, Scheme::Strang] {
        let next = ns_step(&u, &FourierField::zeros(spec), 0.01, scheme).unwrap();
        assert!(max_coeff_diff(&next, &heat_semigroup(&u, 0.01)) < 1e-15);
    }
}

#[test]
fn constant_force_moves_only_the_mean() {
    let spec = GridSpec::new(2, 16).unwrap();
    let force = FourierField::constant(spec, &[0.3, -0.1]);
    for scheme in [Scheme::Lie, Scheme::Strang] {
        let next = ns_step(&FourierField::zeros(spec), &force, 0.02, scheme).unwrap();
        let mean = next.mean();
        assert!((mean[0] - 0.006).abs() < 1e-16 && (mean[1] + 0.002).abs() < 1e-16);
        assert!((next.l2_norm_sq() - (0.006f64.powi(2) + 0.002f64.powi(2))).abs() < 1e-18);
    }
}

fn solve(u0: &FourierField, dt: f64, t: f64, scheme: Scheme) -> FourierField {
    let zero = FourierField::zeros(u0.spec());
    let steps = (t / dt).round() as usize;
    (0..steps).fold(u0.clone(), |u, _| ns_step(&u, &zero, dt, scheme).unwrap())
}

fn observed_order(scheme: Scheme) -> f64 {
    let spec = GridSpec::new(2, 16).unwrap();
    let u0 = sample_fluid(&FluidInit::Random { h_half_norm: 0.5, kmax: 2 }, &spec, 9).unwrap();
    let t = 0.05;
    let base = 0.000625;
    let reference = solve(&u0, base / 64.0, t, scheme);
    let errs: Vec<f64> = [base, base / 2.0, base / 4.0]
        .iter()
        .map(|&dt| solve(&u0, dt, t, scheme).axpy(-1.0, &reference).l2_norm_sq().sqrt())
        .collect();
    (errs[0] / errs[2]).log2() / 2.0
}

#[test]
fn lie_scheme_is_first_order() {
    let order = observed_order(Scheme::Lie);
    assert!(order >= 1.0, "observed order {order}");
}

#[test]
fn strang_scheme_is_second_order() {
    let order = observed_order(Scheme::Strang);
    assert!(order >= 2.0, "observed order {order}");
}

#[test]
fn grad_sup_examples() {
    let spec = GridSpec::new(2, 16).unwrap();
    assert_eq!(grad_sup_norm(&FourierField::constant(spec, &[1.0, 1.0])), 0.0);
    let u = shear(spec, 1.0);
    assert!((grad_sup_norm(&u) - 2.0 * PI).abs() < 1e-10);
    let mut w = FourierField::zeros(spec);
    w.set_mode(&[1, 0], &[Complex64::new(0.0, 0.0), Complex64::new(0.0, -0.5)]);
    let sum = u.axpy(1.0, &w);
    assert!(grad_sup_norm(&sum) <= grad_sup_norm(&u) + grad_sup_norm(&w) + 1e-12);
}

#[test]
fn field_binary_round_trip_is_bit_exact() {
    let spec = GridSpec::new(3, 8).unwrap();
    let u = sample_fluid(&FluidInit::TaylorGreen { amplitude: 0.7 }, &spec, 0).unwrap();
    let mut buf = Vec::new();
    write_field(&mut buf, &u).unwrap();
    assert_eq!(read_field(&mut buf.as_slice()).unwrap(), u);
    buf[4] = 99;
    assert!(matches!(read_field(&mut buf.as_slice()), Err(Error::VersionMismatch { .. })));
}

#[test]
fn random_field_hits_its_target_norm() {
    let spec = GridSpec::new(2, 16).unwrap();
    let u = sample_fluid(&FluidInit::Random { h_half_norm: 0.3, kmax: 4 }, &spec, 1).unwrap();
    assert!((sobolev_norm(&u, SobolevSpec::homogeneous(0.5)) - 0.3).abs() < 1e-12);
    assert!(u.divergence_defect() < 1e-12);
    assert!(u.hermitian_defect() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent_and_orthogonal(seed in 0u64..1000, amp in 0.1f64..3.0) {
        let spec = GridSpec::new(2, 8).unwrap();
        let mut raw = sample_fluid(&FluidInit::Random { h_half_norm: amp, kmax: 2 }, &spec, seed).unwrap();
        // add a gradient part so the projection has work to do
        let grad = physical(spec, |x| vec![amp * (2.0 * PI * x[0]).cos(), amp * (2.0 * PI * x[1]).sin()]);
        raw = raw.axpy(1.0, &grad);
        let p = leray_project(&raw);
        prop_assert!(max_coeff_diff(&leray_project(&p), &p) < 1e-13);
        let residual = raw.axpy(-1.0, &p);
        prop_assert!(p.inner(&residual).abs() < 1e-12);
    }

    #[test]
    fn unforced_step_never_increases_energy(seed in 0u64..1000, amp in 0.1f64..2.0) {
        let spec = GridSpec::new(2, 16).unwrap();
        let u = sample_fluid(&FluidInit::Random { h_half_norm: amp, kmax: 3 }, &spec, seed).unwrap();
        let next = ns_step(&u, &FourierField::zeros(spec), 0.005, Scheme::Lie).unwrap();
        prop_assert!(next.l2_norm_sq() <= u.l2_norm_sq() * (1.0 + 1e-12));
        prop_assert!(next.divergence_defect() < 1e-12);
        prop_assert!(next.hermitian_defect() < 1e-13);
    }

    #[test]
    fn advection_is_orthogonal_to_the_velocity(seed in 0u64..1000) {
        let spec = GridSpec::new(2, 16).unwrap();
        let u = sample_fluid(&FluidInit::Random { h_half_norm: 1.0, kmax: 3 }, &spec, seed).unwrap();
        let n = nonlinear_term(&u);
        prop_assert!(u.inner(&n).abs() < 1e-12 * (1.0 + u.l2_norm_sq()));
    }
}
