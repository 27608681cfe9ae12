use std::time::Instant;

use proptest::prelude::*;
use vnslab::cli_io::parse_config;
use vnslab::coupling::{
    bootstrap_monitor, brinkman_force, run, step, straightening_threshold, strong_existence_criterion, MonitorConfig,
    RunPlan, SimState,
};
use vnslab::particles::{sample_fluid, FluidInit, InitialDataSpec, ParticleEnsemble, VelocityProfile};
use vnslab::spectral::{FourierField, GridSpec, ScalarGrid, Scheme, VectorGrid};

fn grid() -> GridSpec {
    GridSpec::new(2, 8).unwrap()
}

fn monokinetic(velocity: &[f64]) -> ParticleEnsemble {
    let spec = InitialDataSpec {
        velocity: VelocityProfile::Monokinetic { velocity: velocity.to_vec() },
        ..InitialDataSpec::default()
    };
    spec.build_particles(&grid()).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn lock_in_produces_no_force() {
    let spec = grid();
    let u = FourierField::constant(spec, &[0.3, -0.2]);
    let rho: Vec<f64> = (0..spec.len()).map(|i| 1.0 + 0.5 * (i as f64 * 0.37).sin()).collect();
    let j =
        VectorGrid { spec, comps: vec![rho.iter().map(|r| 0.3 * r).collect(), rho.iter().map(|r| -0.2 * r).collect()] };
    let f = brinkman_force(&ScalarGrid { spec, values: rho }, &j, &u);
    assert!(f.l2_norm_sq() < 1e-28);
}

#[test]
fn unit_density_at_rest_forces_with_the_current() {
    let spec = grid();
    let comps: Vec<Vec<f64>> = (0..2).map(|c| (0..spec.len()).map(|i| ((i + c) % 5) as f64 * 0.1).collect()).collect();
    let j = VectorGrid { spec, comps };
    let rho = ScalarGrid { spec, values: vec![1.0; spec.len()] };
    let f = brinkman_force(&rho, &j, &FourierField::zeros(spec));
    let expected = FourierField::from_physical(&j).dealiased();
    let diff = f.axpy(-1.0, &expected);
    assert!(diff.l2_norm_sq() < 1e-28);
}

#[test]
fn single_cell_density_times_constant_velocity() {
    let spec = grid();
    let mut rho = vec![0.0; spec.len()];
    let node = spec.flatten(&[2, 3]);
    rho[node] = 64.0;
    let u = FourierField::constant(spec, &[0.5, 0.25]);
    let f = brinkman_force(&ScalarGrid { spec, values: rho }, &VectorGrid::zeros(spec), &u);
    // F = -rho u, whose mean is -(64 / 64) u
    let mean = f.mean();
    assert!((mean[0] + 0.5).abs() < 1e-15 && (mean[1] + 0.25).abs() < 1e-15);
}

#[test]
fn pure_fluid_energy_decreases() {
    let spec = GridSpec::new(2, 16).unwrap();
    let u = sample_fluid(&FluidInit::TaylorGreen { amplitude: 0.5 }, &spec, 0).unwrap();
    let mut state = SimState::new(u, ParticleEnsemble::empty(2)).unwrap();
    let monitor = MonitorConfig::default();
    let mut last = state.record(&monitor, 2.0).unwrap().energy;
    for _ in 0..50 {
        step(&mut state, 0.01, Scheme::Lie, &monitor).unwrap();
        let e = state.record(&monitor, 2.0).unwrap().energy;
        assert!(e < last);
        last = e;
    }
}

#[test]
fn resting_monokinetic_state_is_steady() {
    let particles = monokinetic(&[0.0, 0.0]);
    let mut state = SimState::new(FourierField::zeros(grid()), particles.clone()).unwrap();
    let monitor = MonitorConfig::default();
    for _ in 0..20 {
        step(&mut state, 0.05, Scheme::Lie, &monitor).unwrap();
    }
    assert!(state.u.l2_norm_sq() < 1e-24);
    assert!(max_abs_diff(state.particles.velocities(), particles.velocities()) < 1e-12);
    assert!(max_abs_diff(state.particles.positions(), particles.positions()) < 1e-12);
}

fn momentum_drift(dt: f64) -> f64 {
    let mut state = SimState::new(FourierField::zeros(grid()), monokinetic(&[0.6, -0.3])).unwrap();
    let monitor = MonitorConfig::default();
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        step(&mut state, dt, Scheme::Lie, &monitor).unwrap();
    }
    state.record(&monitor, 2.0).unwrap().momentum_drift
}

#[test]
fn moving_monokinetic_state_conserves_momentum_at_splitting_order() {
    let drifts: Vec<f64> = [0.04, 0.02, 0.01, 0.005].iter().map(|&dt| momentum_drift(dt)).collect();
    for pair in drifts.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 0.95, "drifts {drifts:?}");
    }
}

#[test]
fn strong_existence_criterion_examples() {
    let mut state = SimState::new(FourierField::zeros(grid()), ParticleEnsemble::empty(2)).unwrap();
    let cfg = MonitorConfig::default();
    assert_eq!(strong_existence_criterion(&state, 0.5, &cfg), (0.25, true));
    state.acc.force_int = 2.0;
    assert_eq!(strong_existence_criterion(&state, 0.0, &cfg), (2.0, false));
}

#[test]
fn criterion_accumulates_the_force_trapezoid() {
    let cfg = parse_config("grid.n = 8\nparticles.nv = 4\ninit.fluid.h_half = 0.2\n").unwrap();
    let mut state = cfg.initial_state().unwrap();
    let monitor = cfg.monitor.clone();
    let mut samples = vec![(0.0, state.acc.last.force_norm_sq)];
    for _ in 0..30 {
        let obs = step(&mut state, 0.01, Scheme::Lie, &monitor).unwrap();
        samples.push((state.t, obs.point.force_norm_sq));
    }
    let trapezoid: f64 = samples.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    let (value, _) = strong_existence_criterion(&state, state.u0_h_half, &monitor);
    let expected = state.u0_h_half.powi(2) + monitor.c_star * trapezoid;
    assert!((value - expected).abs() < 1e-14 * (1.0 + expected.abs()));
}

#[test]
fn gradient_integral_starts_at_time_one() {
    let cfg = parse_config("grid.n = 8\nparticles.nv = 4\ninit.fluid.h_half = 0.2\n").unwrap();
    let mut state = cfg.initial_state().unwrap();
    let monitor = cfg.monitor.clone();
    let dt = 0.05;
    let mut samples = vec![(0.0, state.acc.last.grad_sup)];
    for _ in 0..40 {
        let obs = step(&mut state, dt, Scheme::Lie, &monitor).unwrap();
        samples.push((state.t, obs.point.grad_sup));
    }
    let from_one: f64 =
        samples.windows(2).filter(|w| w[0].0 >= 1.0 - 1e-12).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    let (gradint, ok) = bootstrap_monitor(&state, &monitor);
    assert!((gradint - from_one).abs() < 1e-12 * (1.0 + from_one));
    assert_eq!(ok, gradint < monitor.delta);
}

#[test]
fn still_fluid_never_accumulates_gradient() {
    let mut state = SimState::new(FourierField::zeros(grid()), monokinetic(&[0.0, 0.0])).unwrap();
    let monitor = MonitorConfig::default();
    for _ in 0..30 {
        step(&mut state, 0.1, Scheme::Lie, &monitor).unwrap();
        assert_eq!(bootstrap_monitor(&state, &monitor), (0.0, true));
    }
}

#[test]
fn default_threshold_solves_the_straightening_equation() {
    // Newton's method on g(x) = x e^x - 1/9, independent of the library's bisection
    let mut x = 0.1f64;
    for _ in 0..50 {
        x -= (x * x.exp() - 1.0 / 9.0) / ((1.0 + x) * x.exp());
    }
    let delta = straightening_threshold();
    assert!((delta - x).abs() < 1e-12);
    assert!((delta - 0.100_488_400_337).abs() < 1e-12);
    assert!(delta * delta.exp() <= 1.0 / 9.0);
    assert_eq!(MonitorConfig::default().delta, delta);
}

#[test]
fn monitor_flags_never_recover() {
    let cfg = parse_config("grid.n = 8\nparticles.nv = 4\n").unwrap();
    let mut state = cfg.initial_state().unwrap();
    let monitor = cfg.monitor.clone();
    step(&mut state, 0.01, Scheme::Lie, &monitor).unwrap();
    assert!(state.strong_existence_ok);
    state.acc.force_int = 100.0;
    step(&mut state, 0.01, Scheme::Lie, &monitor).unwrap();
    assert!(!state.strong_existence_ok);
    state.acc.force_int = 0.0;
    step(&mut state, 0.01, Scheme::Lie, &monitor).unwrap();
    assert!(!state.strong_existence_ok);
}

#[test]
fn tiny_run_is_fast_and_reports_often() {
    let cfg =
        parse_config("grid.n = 16\nparticles.nv = 6\ntime.t_final = 1\ntime.dt = 0.01\nio.stride = 10\n").unwrap();
    let mut state = cfg.initial_state().unwrap();
    assert!(state.particles.len() >= 9000);
    let start = Instant::now();
    let records = run(&mut state, &cfg.run_plan(), |_, _| Ok(())).unwrap();
    assert!(start.elapsed().as_secs_f64() < 60.0);
    assert!(records.len() >= 10);
    assert!(records.iter().all(|r| (r.mass - 1.0).abs() <= 1e-12));
}

#[test]
fn fixed_seed_runs_are_bit_identical() {
    let cfg = parse_config("grid.n = 8\nparticles.nv = 4\ntime.t_final = 0.3\ninit.seed = 11\n").unwrap();
    let plan = cfg.run_plan();
    let a = run(&mut cfg.initial_state().unwrap(), &plan, |_, _| Ok(())).unwrap();
    let b = run(&mut cfg.initial_state().unwrap(), &plan, |_, _| Ok(())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fluid_without_particles_matches_the_navier_stokes_solver() {
    let spec = GridSpec::new(2, 16).unwrap();
    let u0 = sample_fluid(&FluidInit::Random { h_half_norm: 0.3, kmax: 3 }, &spec, 5).unwrap();
    let mut state = SimState::new(u0.clone(), ParticleEnsemble::empty(2)).unwrap();
    let plan =
        RunPlan { dt: 0.01, t_final: 0.2, scheme: Scheme::Strang, monitor: MonitorConfig::default(), alpha: 2.0 };
    run(&mut state, &plan, |_, _| Ok(())).unwrap();
    let zero = FourierField::zeros(spec);
    let mut u = u0;
    for _ in 0..20 {
        u = vnslab::spectral::ns_step(&u, &zero, 0.01, Scheme::Strang).unwrap();
    }
    assert_eq!(state.u, u);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn accumulators_and_flags_are_monotone(seed in 0u64..1000, h in 0.05f64..1.5) {
        let text = format!("grid.n = 8\nparticles.nv = 4\ninit.seed = {seed}\ninit.fluid.h_half = {h}\ntime.t_final = 1.5\ntime.dt = 0.02\nio.stride = 1\n");
        let cfg = parse_config(&text).unwrap();
        let mut state = cfg.initial_state().unwrap();
        let records = run(&mut state, &cfg.run_plan(), |_, _| Ok(())).unwrap();
        for w in records.windows(2) {
            prop_assert!(w[1].gradint >= w[0].gradint && w[1].gradint0 >= w[0].gradint0);
            prop_assert!(w[1].force_int >= w[0].force_int && w[1].dissipation_int >= w[0].dissipation_int);
            prop_assert!(w[0].strong_existence_ok || !w[1].strong_existence_ok);
            prop_assert!(w[0].bootstrap_ok || !w[1].bootstrap_ok);
        }
    }
}
