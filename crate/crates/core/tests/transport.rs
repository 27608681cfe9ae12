use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vnslab::spectral::{GridSpec, ScalarGrid};
use vnslab::transport::{
    dual_certificate, exponential_tail, jabin_cauchy_bound, optimal_potential, renormalized_density, w1_entropic,
    w1_exact, Histogram,
};
use vnslab::Error;

fn dirac_on_circle(n: usize, at: usize) -> Histogram {
    let mut m = vec![0.0; n];
    m[at] = 1.0;
    Histogram::on_circle(m).unwrap()
}

fn random_grid_hist(rng: &mut ChaCha8Rng, n: usize) -> Histogram {
    let spec = GridSpec::new(2, n).unwrap();
    let vol = spec.cell_volume();
    let raw: Vec<f64> = (0..spec.len()).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum::<f64>() * vol;
    Histogram::from_grid(&ScalarGrid { spec, values: raw.iter().map(|r| r / total).collect() }).unwrap()
}

/// Optimal assignment cost by enumerating permutations.
fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                rec(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

/// W1 on a discrete circle: `h * min_c sum |F_i - c|`, with F the cumulative difference.
fn circle_w1(a: &[f64], b: &[f64]) -> f64 {
    let h = 1.0 / a.len() as f64;
    let mut cum = Vec::with_capacity(a.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x - y;
        cum.push(s);
    }
    let mut sorted = cum.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = sorted[sorted.len() / 2];
    h * cum.iter().map(|f| (f - median).abs()).sum::<f64>()
}

#[test]
fn identical_histograms_are_at_distance_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_grid_hist(&mut rng, 8);
    assert!(w1_exact(&a, &a).unwrap().abs() < 1e-14);
}

#[test]
fn diracs_on_the_circle() {
    let a = dirac_on_circle(10, 0);
    assert!((w1_exact(&a, &dirac_on_circle(10, 3)).unwrap() - 0.3).abs() < 1e-14);
    // separation 0.7 wraps around to 0.3
    assert!((w1_exact(&a, &dirac_on_circle(10, 7)).unwrap() - 0.3).abs() < 1e-14);
}

#[test]
fn matches_brute_force_assignment_on_uniform_point_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let k = 6;
        let pa: Vec<f64> = (0..2 * k).map(|_| rng.gen()).collect();
        let pb: Vec<f64> = (0..2 * k).map(|_| rng.gen()).collect();
        let a = Histogram::new(vec![true, true], pa, vec![1.0 / k as f64; k]).unwrap();
        let b = Histogram::new(vec![true, true], pb, vec![1.0 / k as f64; k]).unwrap();
        let cost: Vec<Vec<f64>> =
            (0..k).map(|i| (0..k).map(|j| a.distance(a.point(i), b.point(j))).collect()).collect();
        let oracle = brute_force_assignment(&cost) / k as f64;
        let exact = w1_exact(&a, &b).unwrap();
        assert!((exact - oracle).abs() < 1e-12, "{exact} vs {oracle}");
    }
}

#[test]
fn matches_circle_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = 40;
        let mut a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3)).collect();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        a.iter_mut().for_each(|x| *x /= sa);
        b.iter_mut().for_each(|x| *x /= sb);
        let exact =
            w1_exact(&Histogram::on_circle(a.clone()).unwrap(), &Histogram::on_circle(b.clone()).unwrap()).unwrap();
        let oracle = circle_w1(&a, &b);
        assert!((exact - oracle).abs() < 1e-12, "{exact} vs {oracle}");
    }
}

#[test]
fn optimal_potential_certifies_the_exact_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_grid_hist(&mut rng, 8);
    let b = random_grid_hist(&mut rng, 8);
    let exact = w1_exact(&a, &b).unwrap();
    let phi = optimal_potential(&a, &b).unwrap();
    let cert = dual_certificate(&a, &b, &[phi]).unwrap();
    assert!(cert <= exact + 1e-9);
    assert!((cert - exact).abs() < 1e-10, "{cert} vs {exact}");
}

#[test]
fn sawtooth_attains_dirac_distance() {
    let n = 10;
    let a = dirac_on_circle(n, 0);
    let b = dirac_on_circle(n, 3);
    // phi(x) = periodic distance to the point 0.3
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let dx = (x - 0.3).abs();
            dx.min(1.0 - dx)
        })
        .collect();
    assert!((dual_certificate(&a, &b, &[phi]).unwrap() - 0.3).abs() < 1e-14);
}

#[test]
fn steep_test_function_is_rejected() {
    let a = dirac_on_circle(10, 0);
    let phi: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 / 10.0).collect();
    assert!(matches!(dual_certificate(&a, &a, &[phi]), Err(Error::LipschitzViolation(..))));
}

#[test]
fn mass_mismatch_is_rejected() {
    let a = Histogram::on_circle(vec![0.5, 0.5]).unwrap();
    let b = Histogram::on_circle(vec![0.5, 0.6]).unwrap();
    assert!(matches!(w1_exact(&a, &b), Err(Error::MassMismatch(..))));
}

#[test]
fn oversized_histograms_are_rejected() {
    let a = Histogram::on_circle(vec![1.0 / 5000.0; 5000]).unwrap();
    assert!(matches!(w1_exact(&a, &a), Err(Error::TooManyBins { .. })));
}

#[test]
fn entropic_is_close_to_exact_on_16x16() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_grid_hist(&mut rng, 16);
    let b = random_grid_hist(&mut rng, 16);
    let exact = w1_exact(&a, &b).unwrap();
    let ent = w1_entropic(&a, &b, 1e-3).unwrap();
    eprintln!("exact {exact} entropic {ent}");
    assert!((ent - exact).abs() <= 0.02 * exact, "{ent} vs {exact}");
}

#[test]
fn entropic_of_identical_histograms_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_grid_hist(&mut rng, 8);
    let eps = 1e-2;
    assert!(w1_entropic(&a, &a, eps).unwrap() <= eps * (a.len() as f64).ln());
}

#[test]
fn renormalized_density_shifts() {
    let spec = GridSpec::new(2, 16).unwrap();
    let values: Vec<f64> =
        (0..spec.len()).map(|i| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * spec.node(i)[0]).cos()).collect();
    let rho = ScalarGrid { spec, values };
    let same = renormalized_density(&rho, 0.0, &[0.3, 0.1]);
    let full = renormalized_density(&rho, 1.0, &[1.0, -2.0]);
    for i in 0..spec.len() {
        assert!((same.values[i] - rho.values[i]).abs() < 1e-13);
        assert!((full.values[i] - rho.values[i]).abs() < 1e-13);
    }
    let shifted = renormalized_density(&rho, 2.0, &[0.05, 0.0]);
    for i in 0..spec.len() {
        let x = spec.node(i);
        let expect = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * (x[0] + 0.1)).cos();
        assert!((shifted.values[i] - expect).abs() < 1e-13);
    }
}

#[test]
fn root_energy_integral_of_exponential() {
    let series: Vec<(f64, f64)> = (0..=4000)
        .map(|k| {
            let t = k as f64 * 0.001;
            (t, (-2.0 * t).exp())
        })
        .collect();
    let bound = jabin_cauchy_bound(&series).unwrap();
    let (s, t) = (0.5, 3.0);
    assert!((bound.between(s, t) - ((-s).exp() - (-t).exp())).abs() < 1e-7);
    assert!((exponential_tail(1.0, 2.0, s) - (-s).exp()).abs() < 1e-15);
    let zero = jabin_cauchy_bound(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
    assert_eq!(zero.between(0.0, 1.0), 0.0);
    assert!(jabin_cauchy_bound(&[(0.0, -1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn w1_is_symmetric_and_satisfies_triangle(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_grid_hist(&mut rng, 8);
        let b = random_grid_hist(&mut rng, 8);
        let c = random_grid_hist(&mut rng, 8);
        let ab = w1_exact(&a, &b).unwrap();
        let ba = w1_exact(&b, &a).unwrap();
        let bc = w1_exact(&b, &c).unwrap();
        let ac = w1_exact(&a, &c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!(ab > 0.0);
    }
}
