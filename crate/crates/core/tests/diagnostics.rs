use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnslab::diagnostics::{
    dissipation, fit_decay_rate, fluid_distance_to_constant, identity_eqmoy, kinetic_energy, lambda_lower_bound,
    modulated_energy, w1_monokinetic_upper,
};
use vnslab::particles::{sample_fluid, CicSampler, FluidInit, ParticleEnsemble, VelocitySampler};
use vnslab::spectral::{FourierField, GridSpec};

fn grid() -> GridSpec {
    GridSpec::new(2, 16).unwrap()
}

fn sine_shear(amplitude: f64) -> FourierField {
    let mut u = FourierField::zeros(grid());
    // a sin(2 pi x_2) = (a / 2i) e^{2 pi i x_2} + c.c.
    u.set_mode(&[0, 1], &[Complex64::new(0.0, -0.5 * amplitude), Complex64::new(0.0, 0.0)]);
    u.set_div_free(true);
    u
}

fn random_particles(seed: u64, count: usize) -> ParticleEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..2 * count).map(|_| rng.gen_range(0.0..1.0)).collect();
    let v: Vec<f64> = (0..2 * count).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ParticleEnsemble::new(2, x, v, raw.iter().map(|w| w / total).collect()).unwrap()
}

fn random_fluid(seed: u64) -> FourierField {
    let mut u = sample_fluid(&FluidInit::Random { h_half_norm: 0.7, kmax: 3 }, &grid(), seed).unwrap();
    let mut mean = vec![Complex64::new(0.0, 0.0); 2];
    mean[0] = Complex64::new(0.15, 0.0);
    mean[1] = Complex64::new(-0.05, 0.0);
    u.set_mode(&[0, 0], &mean);
    u
}

fn two_particles() -> ParticleEnsemble {
    ParticleEnsemble::new(2, vec![0.1, 0.1, 0.6, 0.3], vec![1.0, 0.0, 0.0, 2.0], vec![0.5, 0.5]).unwrap()
}

#[test]
fn kinetic_energy_examples() {
    let zero = FourierField::zeros(grid());
    assert_eq!(kinetic_energy(&zero, &ParticleEnsemble::empty(2)), 0.0);
    assert_eq!(kinetic_energy(&zero, &two_particles()), 1.25);
    let a = 0.8;
    let e = kinetic_energy(&sine_shear(a), &ParticleEnsemble::empty(2));
    assert!((e - 0.5 * a * a / 2.0).abs() < 1e-15);
}

#[test]
fn dissipation_examples() {
    let zero = FourierField::zeros(grid());
    let p = two_particles();
    let kinetic = kinetic_energy(&zero, &p);
    assert_eq!(dissipation(&zero, &p), 2.0 * kinetic);

    let u = FourierField::constant(grid(), &[0.4, -0.1]);
    let locked =
        ParticleEnsemble::new(2, vec![0.2, 0.9, 0.5, 0.5], vec![0.4, -0.1, 0.4, -0.1], vec![0.5, 0.5]).unwrap();
    assert!(dissipation(&u, &locked).abs() < 1e-28);

    // particles riding a shear flow only feel the viscous part
    let a = 0.5;
    let shear = sine_shear(a);
    let xs = [0.3, 0.05, 0.7, 0.45];
    let riding: Vec<f64> = xs.chunks(2).flat_map(|x| [a * (2.0 * PI * x[1]).sin(), 0.0]).collect();
    let p = ParticleEnsemble::new(2, xs.to_vec(), riding, vec![0.5, 0.5]).unwrap();
    let viscous = (2.0 * PI * a).powi(2) / 2.0;
    // the CIC interpolant differs from the exact sine off the nodes
    let interp_gap: f64 = {
        let s = CicSampler::from_field(&shear);
        (0..2).map(|i| 0.5 * (s.sample(p.position(i))[0] - p.velocity(i)[0]).powi(2)).sum()
    };
    assert!((dissipation(&shear, &p) - viscous - interp_gap).abs() < 1e-12);
}

#[test]
fn dissipation_matches_a_brute_force_loop() {
    let u = random_fluid(3);
    let p = random_particles(3, 500);
    let sampler = CicSampler::from_field(&u);
    let mut drag = 0.0;
    for i in 0..p.len() {
        let s = sampler.sample(p.position(i));
        let v = p.velocity(i);
        drag += p.weight(i) * ((s[0] - v[0]).powi(2) + (s[1] - v[1]).powi(2));
    }
    // |grad u|^2 by Parseval, mode by mode
    let spec = u.spec();
    let mut viscous = 0.0;
    for idx in 0..spec.len() {
        let k = spec.mode(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        viscous += 4.0 * PI * PI * k2 * u.components().iter().map(|c| c[idx].norm_sqr()).sum::<f64>();
    }
    let got = dissipation(&u, &p);
    assert!((got - drag - viscous).abs() < 1e-13 * (1.0 + got));
}

#[test]
fn modulated_energy_examples() {
    let u = FourierField::constant(grid(), &[0.2, 0.3]);
    let eq = ParticleEnsemble::new(2, vec![0.1, 0.2, 0.8, 0.4], vec![0.2, 0.3, 0.2, 0.3], vec![0.5, 0.5]).unwrap();
    assert!(modulated_energy(&u, &eq).abs() < 1e-30);

    let sym = ParticleEnsemble::new(2, vec![0.1, 0.2, 0.8, 0.4], vec![0.7, -0.2, -0.7, 0.2], vec![0.5, 0.5]).unwrap();
    let zero = FourierField::zeros(grid());
    assert!((modulated_energy(&zero, &sym) - 0.5 * (0.49 + 0.04)).abs() < 1e-15);
}

#[test]
fn exact_conservation_zeroes_the_mean_identity() {
    let (mean_j, mean_u) = ([0.3, -0.1], [0.1, 0.4]);
    let conserved = [0.4, 0.3];
    assert!(identity_eqmoy(&mean_j, &mean_u, &conserved).abs() < 1e-16);
}

#[test]
fn perturbed_mean_velocity_gives_a_linear_residual() {
    let (mean_j, mean_u) = ([0.3, -0.1], [0.1, 0.4]);
    let conserved = [0.4, 0.3];
    // with <u> -> <u> + eps e_1 the residual is -(j_1 - u_1) eps / 2 + eps^2 / 4
    for eps in [1e-2, 1e-4, 1e-6] {
        let r = identity_eqmoy(&mean_j, &[mean_u[0] + eps, mean_u[1]], &conserved);
        let expected = -0.5 * (mean_j[0] - mean_u[0]) * eps + 0.25 * eps * eps;
        assert!((r - expected).abs() < 1e-15, "{r} vs {expected}");
    }
}

#[test]
fn lambda_examples() {
    let cp = (2.0 * PI).powi(2);
    assert_eq!(lambda_lower_bound(0.0, cp).unwrap(), 1.0);
    assert!((lambda_lower_bound(1e-12, cp).unwrap() - 1.0).abs() < 1e-12);
    let lam = lambda_lower_bound(1.0, cp).unwrap();
    let alpha = 1.0 / (cp / 2.0 + 1.0);
    assert!((alpha - 0.048218).abs() < 1e-6);
    assert!((lam - (1.0 - alpha)).abs() < 1e-15);
    assert!((lam - 0.951782).abs() < 1e-6);
    assert!(lambda_lower_bound(-1.0, cp).is_err());
    // a tiny Poincare constant makes the fluid branch active
    assert_eq!(lambda_lower_bound(1e-3, 0.1).unwrap(), 0.05);
}

#[test]
fn lambda_is_nonincreasing_in_the_density_bound() {
    let cp = (2.0 * PI).powi(2);
    let values: Vec<f64> = (0..200).map(|i| lambda_lower_bound(0.05 * i as f64, cp).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn decay_fit_examples() {
    let exact: Vec<(f64, f64)> = (0..50).map(|i| (0.1 * i as f64, 3.0 * (-2.0 * 0.1 * i as f64).exp())).collect();
    let fit = fit_decay_rate(&exact).unwrap();
    assert!((fit.rate - 2.0).abs() < 1e-6);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);

    let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.5)).collect();
    assert_eq!(fit_decay_rate(&flat).unwrap().rate, 0.0);

    assert!(fit_decay_rate(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
}

#[test]
fn decay_fit_tolerates_one_percent_noise() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let t = 0.05 * i as f64;
                (t, 3.0 * (-2.0 * t).exp() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let fit = fit_decay_rate(&noisy).unwrap();
        assert!((fit.rate - 2.0).abs() < 0.05, "seed {seed}: {}", fit.rate);
    }
}

#[test]
fn kinetic_w1_examples() {
    let target = [0.3, -0.2];
    let at_target =
        ParticleEnsemble::new(2, vec![0.1, 0.2, 0.5, 0.9], vec![0.3, -0.2, 0.3, -0.2], vec![0.5, 0.5]).unwrap();
    assert_eq!(w1_monokinetic_upper(&at_target, &target), 0.0);

    let p = two_particles();
    let hand = 0.5 * (1.0f64 - 0.3).hypot(0.2) + 0.5 * (0.3f64).hypot(2.2);
    assert!((w1_monokinetic_upper(&p, &target) - hand).abs() < 1e-15);
}

#[test]
fn sqrt_two_form_of_the_w1_bound_fails_with_exact_conservation() {
    // <u + j> = 0 exactly, kinetic and fluid parts of equal size: the upper bound is
    // a + b while sqrt(2) E^1/2 = sqrt(a^2 + b^2)
    let b = 0.4;
    let p = ParticleEnsemble::new(2, vec![0.1, 0.2, 0.6, 0.7], vec![b, 0.0, -b, 0.0], vec![0.5, 0.5]).unwrap();
    let u = sine_shear(b * 2f64.sqrt());
    let target = [0.0, 0.0];
    let upper = w1_monokinetic_upper(&p, &target) + fluid_distance_to_constant(&u, &target);
    let emod = modulated_energy(&u, &p);
    assert!((upper - 2.0 * b).abs() < 1e-15);
    assert!((emod - b * b).abs() < 1e-15);
    assert!(upper > 2f64.sqrt() * emod.sqrt() + 1e-10);
    // the constants that do follow from the triangle and Cauchy-Schwarz inequalities
    assert!(upper <= 2.0 * emod.sqrt() + 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modulated_energy_offset_is_the_mean_momentum(seed in 0u64..10_000) {
        let u = random_fluid(seed);
        let p = random_particles(seed, 64);
        let c: Vec<f64> = u.mean().iter().zip(p.momentum()).map(|(a, b)| a + b).collect();
        let offset = modulated_energy(&u, &p) - kinetic_energy(&u, &p);
        let expected = -0.25 * c.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((offset - expected).abs() < 1e-12);
        prop_assert!(modulated_energy(&u, &p) <= kinetic_energy(&u, &p) + 1e-15);
    }

    #[test]
    fn kinetic_w1_obeys_cauchy_schwarz(seed in 0u64..10_000, ux in -1.0f64..1.0, uy in -1.0f64..1.0) {
        let p = random_particles(seed, 40);
        let target = [ux, uy];
        let mean_j = p.momentum();
        let spread: f64 = (0..p.len())
            .map(|i| {
                let v = p.velocity(i);
                p.weight(i) * ((v[0] - mean_j[0]).powi(2) + (v[1] - mean_j[1]).powi(2))
            })
            .sum();
        let bound = spread.sqrt() + (mean_j[0] - ux).hypot(mean_j[1] - uy);
        prop_assert!(w1_monokinetic_upper(&p, &target) <= bound + 1e-12);
    }

    #[test]
    fn energies_are_nonnegative(seed in 0u64..10_000) {
        let u = random_fluid(seed);
        let p = random_particles(seed, 32);
        prop_assert!(kinetic_energy(&u, &p) >= 0.0);
        prop_assert!(dissipation(&u, &p) >= 0.0);
        prop_assert!(modulated_energy(&u, &p) >= 0.0);
    }
}
