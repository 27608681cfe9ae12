use std::f64::consts::PI;

use proptest::prelude::*;
use vnslab::particles::{
    deposit, estimate_nq, interpolate, moment, pull_back, push, push_one, CicSampler, FnVelocity, InitialDataSpec,
    ParticleEnsemble, SpatialProfile, UniformVelocity, VelocityProfile, VelocitySampler,
};
use vnslab::spectral::{FourierField, GridSpec, VectorGrid};

fn two_particles() -> ParticleEnsemble {
    ParticleEnsemble::new(2, vec![0.1, 0.2, 0.7, 0.4], vec![1.0, 0.0, 0.0, -2.0], vec![0.5, 0.5]).unwrap()
}

fn periodic_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn lattice_ensemble(seed: u64) -> ParticleEnsemble {
    let spec = InitialDataSpec {
        spatial: SpatialProfile::Cosine { amplitude: 0.4, wavenumber: 1 },
        velocity: VelocityProfile::Gaussian { theta: 0.3, mean: vec![0.1, -0.2] },
        nv: 4,
        seed,
        ..InitialDataSpec::default()
    };
    spec.build_particles(&GridSpec::new(2, 8).unwrap()).unwrap()
}

#[test]
fn frictional_free_streaming_step_has_closed_form() {
    let mut p = two_particles();
    let dt = 0.3;
    push(&mut p, &UniformVelocity::new(&[0.0, 0.0]), dt).unwrap();
    let decay = 1.0 - (-dt).exp();
    assert!((p.velocity(0)[0] - (-dt).exp()).abs() < 1e-15);
    assert!((p.position(0)[0] - (0.1 + decay)).abs() < 1e-15);
    assert!((p.position(1)[1] - (0.4 - 2.0 * decay).rem_euclid(1.0)).abs() < 1e-15);
}

#[test]
fn backward_characteristics_match_the_explicit_solution() {
    // over [0, t] with u = 0, X(0; t, x, v) = x - (e^t - 1) v and V(0) = e^t v
    let (x, v) = (0.3, 0.8);
    let t = 1.0;
    let mut p = ParticleEnsemble::new(1, vec![x], vec![v], vec![1.0]).unwrap();
    let zero = UniformVelocity::new(&[0.0]);
    for _ in 0..10 {
        pull_back(&mut p, &zero, t / 10.0).unwrap();
    }
    assert!(periodic_gap(p.position(0)[0], x - (t.exp() - 1.0) * v) < 1e-12);
    assert!((p.velocity(0)[0] - t.exp() * v).abs() < 1e-12);
}

#[test]
fn uniform_flow_is_a_fixed_point_of_the_velocity() {
    let u = [0.25, -0.4];
    let mut p = ParticleEnsemble::new(2, vec![0.5, 0.5], u.to_vec(), vec![1.0]).unwrap();
    push(&mut p, &UniformVelocity::new(&u), 0.7).unwrap();
    assert_eq!(p.velocity(0), &u);
    let mut q = two_particles();
    push(&mut q, &UniformVelocity::new(&u), 0.2).unwrap();
    let expected = u[0] + (-0.2f64).exp() * (1.0 - u[0]);
    assert!((q.velocity(0)[0] - expected).abs() < 1e-15);
}

fn smooth_field() -> FnVelocity<impl Fn(&[f64]) -> [f64; 3] + Sync> {
    FnVelocity { d: 2, f: |x: &[f64]| [0.6 * (2.0 * PI * x[1]).sin(), 0.4 * (2.0 * PI * x[0]).cos(), 0.0] }
}

fn rk4_reference(x0: [f64; 2], v0: [f64; 2], t: f64) -> [f64; 2] {
    let field = smooth_field();
    let rhs = |s: [f64; 4]| {
        let u = field.sample(&[s[0], s[1]]);
        [s[2], s[3], u[0] - s[2], u[1] - s[3]]
    };
    let steps = 20_000;
    let h = t / steps as f64;
    let mut s = [x0[0], x0[1], v0[0], v0[1]];
    let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
    for _ in 0..steps {
        let k1 = rhs(s);
        let k2 = rhs(add(s, k1, h / 2.0));
        let k3 = rhs(add(s, k2, h / 2.0));
        let k4 = rhs(add(s, k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    [s[0], s[1]]
}

#[test]
fn exponential_integrator_is_second_order() {
    let (x0, v0, t) = ([0.2, 0.7], [0.5, -0.3], 1.0);
    let reference = rk4_reference(x0, v0, t);
    let field = smooth_field();
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let (mut x, mut v) = (x0, v0);
            for _ in 0..(t / dt).round() as usize {
                push_one(&mut x, &mut v, &field, dt);
            }
            periodic_gap(x[0], reference[0]).hypot(periodic_gap(x[1], reference[1]))
        })
        .collect();
    let order = (errors[1] / errors[2]).log2();
    assert!(order >= 2.0 - 0.05, "errors {errors:?}, order {order}");
    assert!((errors[0] / errors[1]).log2() >= 1.9, "errors {errors:?}");
}

#[test]
fn deposit_at_a_node_is_a_single_spike() {
    let grid = GridSpec::new(2, 8).unwrap();
    let p = ParticleEnsemble::new(2, vec![3.0 / 8.0, 5.0 / 8.0], vec![0.5, 0.0], vec![1.0]).unwrap();
    let m = deposit(&p, &grid);
    let node = grid.flatten(&[3, 5]);
    assert_eq!(m.rho.values[node], 1.0 / grid.cell_volume());
    assert_eq!(m.rho.values.iter().filter(|&&r| r != 0.0).count(), 1);
    assert_eq!(m.j.comps[0][node], 0.5 / grid.cell_volume());
}

#[test]
fn deposit_at_a_cell_center_splits_in_quarters() {
    let grid = GridSpec::new(2, 8).unwrap();
    let h = grid.spacing();
    let p = ParticleEnsemble::new(2, vec![7.5 * h, 2.5 * h], vec![0.0, 0.0], vec![1.0]).unwrap();
    let m = deposit(&p, &grid);
    let quarter = 0.25 / grid.cell_volume();
    // the stencil wraps across the x_1 = 1 boundary
    for ij in [[7, 2], [0, 2], [7, 3], [0, 3]] {
        assert!((m.rho.values[grid.flatten(&ij)] - quarter).abs() < 1e-12);
    }
}

#[test]
fn deposit_conserves_mass_and_momentum() {
    let p = lattice_ensemble(0);
    let grid = GridSpec::new(2, 16).unwrap();
    let m = deposit(&p, &grid);
    assert!((m.rho.integral() - 1.0).abs() < 1e-14);
    let j = m.j.integral();
    let direct = p.momentum();
    for a in 0..2 {
        assert!((j[a] - direct[a]).abs() < 1e-13);
    }
    assert_eq!(moment(&p, 0.0), 1.0);
}

#[test]
fn interpolation_examples() {
    let grid = GridSpec::new(2, 8).unwrap();
    let p = lattice_ensemble(1);
    let c = interpolate(&FourierField::constant(grid, &[0.3, -0.7]), &p);
    assert!(c.chunks(2).all(|v| (v[0] - 0.3).abs() < 1e-14 && (v[1] + 0.7).abs() < 1e-14));

    let mut u = FourierField::zeros(grid);
    u.set_mode(&[1, 1], &[num_complex::Complex64::new(0.2, 0.1), num_complex::Complex64::new(-0.2, -0.1)]);
    let samples = u.to_physical();
    let node = grid.flatten(&[2, 6]);
    let at_node = ParticleEnsemble::new(2, vec![0.25, 0.75], vec![0.0, 0.0], vec![1.0]).unwrap();
    let got = interpolate(&u, &at_node);
    assert_eq!(got, vec![samples.comps[0][node], samples.comps[1][node]]);
}

#[test]
fn bilinear_reproduction_of_linear_samples() {
    let grid = GridSpec::new(2, 8).unwrap();
    let mut comps = vec![vec![0.0; grid.len()]; 2];
    for i in 0..grid.len() {
        let x = grid.node(i);
        comps[0][i] = 2.0 * x[0] + 3.0 * x[1] - 1.0;
        comps[1][i] = -x[0] + 0.5 * x[1];
    }
    let sampler = CicSampler::new(VectorGrid { spec: grid, comps });
    // points away from the periodic seam, where the node samples are linear
    for x in [[0.13, 0.41], [0.5, 0.5], [0.8, 0.06], [0.33, 0.87]] {
        let s = sampler.sample(&x);
        assert!((s[0] - (2.0 * x[0] + 3.0 * x[1] - 1.0)).abs() < 1e-14);
        assert!((s[1] - (-x[0] + 0.5 * x[1])).abs() < 1e-14);
    }
}

#[test]
fn moment_examples() {
    let p = ParticleEnsemble::new(2, vec![0.0; 4], vec![1.0, 0.0, 0.0, 2.0], vec![0.5, 0.5]).unwrap();
    assert_eq!(moment(&p, 2.0), 2.5);
    assert_eq!(moment(&p, 0.0), 1.0);
}

#[test]
fn friction_scales_velocity_moments_exactly() {
    let mut p = lattice_ensemble(2);
    let alpha = 3.5;
    let m0 = moment(&p, alpha);
    let zero = UniformVelocity::new(&[0.0, 0.0]);
    let (dt, steps) = (0.05, 40);
    for _ in 0..steps {
        push(&mut p, &zero, dt).unwrap();
    }
    let t = dt * steps as f64;
    assert!((moment(&p, alpha) - (-alpha * t).exp() * m0).abs() < 1e-12);
}

#[test]
fn decay_constant_examples() {
    let d = 2;
    let poly = InitialDataSpec { velocity: VelocityProfile::PolyTail { q: 5.0 }, ..InitialDataSpec::default() };
    // at q equal to the tail exponent N_q is the normalization constant
    let c = poly.density(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
    assert!((estimate_nq(&poly, 5.0, d).unwrap() - c).abs() < 1e-14 * c);

    let compact = InitialDataSpec {
        velocity: VelocityProfile::Compact { radius: 1.5, power: 2.0 },
        ..InitialDataSpec::default()
    };
    let q = 5.0;
    let oracle = (0..=150_000)
        .map(|i| {
            let r = 1.5 * i as f64 / 150_000.0;
            (1.0 + r.powf(q)) * compact.density(&[0.0, 0.0], &[r, 0.0]).unwrap()
        })
        .fold(0.0, f64::max);
    let nq = estimate_nq(&compact, q, d).unwrap();
    assert!((nq - oracle).abs() < 1e-12 * oracle, "{nq} vs {oracle}");

    let empty = InitialDataSpec { mass: 0.0, ..InitialDataSpec::default() };
    assert_eq!(estimate_nq(&empty, q, d).unwrap(), 0.0);
}

#[test]
fn lattice_weights_sum_to_one_exactly() {
    let p = lattice_ensemble(3);
    assert_eq!(p.mass(), 1.0);
    assert!(p.meta.tail_mass <= 1e-8 * (1.0 + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn push_then_pull_back_is_the_identity(
        x in prop::array::uniform2(0.0f64..1.0),
        v in prop::array::uniform2(-3.0f64..3.0),
        u in prop::array::uniform2(-1.0f64..1.0),
        dt in 1e-3f64..0.5,
    ) {
        let mut p = ParticleEnsemble::new(2, x.to_vec(), v.to_vec(), vec![1.0]).unwrap();
        let field = UniformVelocity::new(&u);
        push(&mut p, &field, dt).unwrap();
        pull_back(&mut p, &field, dt).unwrap();
        prop_assert!(periodic_gap(p.position(0)[0], x[0]) < 1e-12);
        prop_assert!(periodic_gap(p.position(0)[1], x[1]) < 1e-12);
        prop_assert!((p.velocity(0)[0] - v[0]).abs() < 1e-12 && (p.velocity(0)[1] - v[1]).abs() < 1e-12);
    }

    #[test]
    fn deposit_and_interpolation_are_adjoint(x in prop::array::uniform2(0.0f64..1.0), seed in 0u64..1000) {
        let grid = GridSpec::new(2, 8).unwrap();
        let p = ParticleEnsemble::new(2, x.to_vec(), vec![1.0, 0.0], vec![1.0]).unwrap();
        let g = vnslab::particles::sample_fluid(
            &vnslab::particles::FluidInit::Random { h_half_norm: 1.0, kmax: 2 }, &grid, seed,
        ).unwrap();
        let samples = g.to_physical();
        let m = deposit(&p, &grid);
        let pairing: f64 = m.rho.values.iter().zip(&samples.comps[0]).map(|(r, s)| r * s).sum::<f64>()
            * grid.cell_volume();
        let direct = interpolate(&g, &p)[0];
        prop_assert!((pairing - direct).abs() < 1e-13);
    }

    #[test]
    fn pushing_never_touches_weights_and_keeps_positions_on_the_torus(seed in 0u64..100, dt in 1e-3f64..1.0) {
        let mut p = lattice_ensemble(seed);
        let w = p.weights().to_vec();
        push(&mut p, &smooth_field(), dt).unwrap();
        prop_assert_eq!(p.weights(), &w[..]);
        prop_assert!(p.positions().iter().all(|&x| (0.0..1.0).contains(&x)));
        prop_assert_eq!(moment(&p, 0.0), 1.0);
    }
}
