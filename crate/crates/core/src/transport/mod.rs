//! Wasserstein-1 distances on the periodic torus (optionally times a velocity box),
//! Kantorovich dual certificates, and the functionals built on them.

mod simplex;
mod sinkhorn;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::particles::ParticleEnsemble;
use crate::spectral::{fft, ScalarGrid};

pub use simplex::{solve_transport, TransportSolution};

/// Largest histogram handled by the exact solver.
pub const MAX_EXACT_BINS: usize = 4096;
const MASS_TOL: f64 = 1e-12;

/// Weighted points in a product of circles (periodic axes of length 1) and lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// Periodicity of each axis.
    pub periodic: Vec<bool>,
    /// Bin centers, flat with stride `periodic.len()`.
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn new(periodic: Vec<bool>, points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let dim = periodic.len();
        if dim == 0 || points.len() != masses.len() * dim {
            return Err(Error::InvalidArgument("histogram points and masses disagree".into()));
        }
        if let Some((i, &m)) = masses.iter().enumerate().find(|(_, m)| !(**m >= 0.0)) {
            return Err(Error::NegativeMass(m, i));
        }
        Ok(Self { periodic, points, masses })
    }

    /// Masses `rho * cell volume` at the nodes of a periodic grid.
    pub fn from_grid(rho: &ScalarGrid) -> Result<Self> {
        let spec = rho.spec;
        let d = spec.d();
        let vol = spec.cell_volume();
        let points = (0..spec.len()).flat_map(|i| spec.node(i).into_iter().take(d)).collect();
        Self::new(vec![true; d], points, rho.values.iter().map(|r| r * vol).collect())
    }

    /// Nodes `i / n` of a one-dimensional periodic grid.
    pub fn on_circle(masses: Vec<f64>) -> Result<Self> {
        let n = masses.len() as f64;
        let points = (0..masses.len()).map(|i| i as f64 / n).collect();
        Self::new(vec![true], points, masses)
    }

    /// Phase-space binning of particles: `nx` periodic bins per spatial axis and `nv` bins
    /// per velocity axis over `center +- half_width` (outliers go to the edge bins).
    pub fn phase_space(
        particles: &ParticleEnsemble,
        nx: usize,
        nv: usize,
        center: &[f64],
        half_width: f64,
    ) -> Result<Self> {
        let d = particles.dim();
        let bins = (nx * nv).pow(d as u32);
        let mut masses = vec![0.0; bins];
        let dv = 2.0 * half_width / nv as f64;
        for i in 0..particles.len() {
            let mut idx = 0usize;
            for &x in particles.position(i) {
                idx = idx * nx + ((x * nx as f64) as usize).min(nx - 1);
            }
            for (a, &v) in particles.velocity(i).iter().enumerate() {
                let k = ((v - center[a] + half_width) / dv).floor().clamp(0.0, (nv - 1) as f64) as usize;
                idx = idx * nv + k;
            }
            masses[idx] += particles.weight(i);
        }
        let mut points = Vec::with_capacity(bins * 2 * d);
        for b in 0..bins {
            let mut rem = b;
            let mut coords = vec![0.0; 2 * d];
            for a in (0..d).rev() {
                coords[d + a] = center[a] - half_width + ((rem % nv) as f64 + 0.5) * dv;
                rem /= nv;
            }
            for a in (0..d).rev() {
                coords[a] = ((rem % nx) as f64 + 0.5) / nx as f64;
                rem /= nx;
            }
            points.extend(coords);
        }
        let periodic = (0..2 * d).map(|a| a < d).collect();
        Self::new(periodic, points, masses)
    }

    /// Phase-space histogram of `rho (x) delta_U` on the same bins as [`Histogram::phase_space`].
    pub fn monokinetic(
        rho_bins: &[f64],
        d: usize,
        nx: usize,
        nv: usize,
        center: &[f64],
        half_width: f64,
        target: &[f64],
    ) -> Result<Self> {
        let mut ens_x = Vec::new();
        let mut ens_v = Vec::new();
        let mut w = Vec::new();
        for (b, &m) in rho_bins.iter().enumerate() {
            let mut rem = b;
            let mut x = vec![0.0; d];
            for a in (0..d).rev() {
                x[a] = ((rem % nx) as f64 + 0.5) / nx as f64;
                rem /= nx;
            }
            ens_x.extend(x);
            ens_v.extend_from_slice(&target[..d]);
            w.push(m);
        }
        let ens = ParticleEnsemble::new(d, ens_x, ens_v, w)?;
        Self::phase_space(&ens, nx, nv, center, half_width)
    }

    pub fn dim(&self) -> usize {
        self.periodic.len()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim()..(i + 1) * self.dim()]
    }

    /// Ground distance: per-axis `min(|dx|, 1 - |dx|)` on periodic axes, Euclidean overall.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        self.periodic
            .iter()
            .zip(p.iter().zip(q))
            .map(|(&per, (a, b))| {
                let mut delta = (a - b).abs();
                if per {
                    delta %= 1.0;
                    delta = delta.min(1.0 - delta);
                }
                delta * delta
            })
            .sum::<f64>()
            .sqrt()
    }

    fn check_pair(&self, other: &Self) -> Result<()> {
        if self.periodic != other.periodic {
            return Err(Error::InvalidArgument("histograms live on different spaces".into()));
        }
        let (ta, tb) = (self.total(), other.total());
        if (ta - tb).abs() > MASS_TOL * ta.max(tb).max(1.0) {
            return Err(Error::MassMismatch(ta, tb));
        }
        Ok(())
    }
}

/// Exact W1 with its optimal plan and an optimal 1-Lipschitz potential.
#[derive(Clone, Debug)]
pub struct ExactW1 {
    pub value: f64,
    pub solution: TransportSolution,
    /// Indices into `a` and `b` of the supports passed to the solver.
    pub support_a: Vec<usize>,
    pub support_b: Vec<usize>,
}

pub fn w1_exact_detailed(a: &Histogram, b: &Histogram) -> Result<ExactW1> {
    a.check_pair(b)?;
    let bins = a.len().max(b.len());
    if bins > MAX_EXACT_BINS {
        return Err(Error::TooManyBins { bins, max: MAX_EXACT_BINS });
    }
    let support_a: Vec<usize> = (0..a.len()).filter(|&i| a.masses[i] > 0.0).collect();
    let support_b: Vec<usize> = (0..b.len()).filter(|&j| b.masses[j] > 0.0).collect();
    let supply: Vec<f64> = support_a.iter().map(|&i| a.masses[i]).collect();
    let mut demand: Vec<f64> = support_b.iter().map(|&j| b.masses[j]).collect();
    // balance exactly so the artificial arcs end at zero flow
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if sb > 0.0 {
        demand.iter_mut().for_each(|x| *x *= sa / sb);
    }
    let solution = solve_transport(&supply, &demand, |i, j| a.distance(a.point(support_a[i]), b.point(support_b[j])))?;
    Ok(ExactW1 { value: solution.cost, solution, support_a, support_b })
}

/// Exact W1 between equal-mass histograms (network simplex).
pub fn w1_exact(a: &Histogram, b: &Histogram) -> Result<f64> {
    Ok(w1_exact_detailed(a, b)?.value)
}

/// Dense ground-cost matrix between the bins of `a` and `b`.
pub fn cost_matrix(a: &Histogram, b: &Histogram) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out.push(a.distance(a.point(i), b.point(j)));
        }
    }
    out
}

/// Transport cost of the entropic optimal plan at regularization `eps`.
pub fn w1_entropic(a: &Histogram, b: &Histogram, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("entropic regularization must be positive, got {eps}")));
    }
    a.check_pair(b)?;
    let support_a: Vec<usize> = (0..a.len()).filter(|&i| a.masses[i] > 0.0).collect();
    let support_b: Vec<usize> = (0..b.len()).filter(|&j| b.masses[j] > 0.0).collect();
    let ma: Vec<f64> = support_a.iter().map(|&i| a.masses[i]).collect();
    let mut mb: Vec<f64> = support_b.iter().map(|&j| b.masses[j]).collect();
    let (sa, sb): (f64, f64) = (ma.iter().sum(), mb.iter().sum());
    mb.iter_mut().for_each(|x| *x *= sa / sb);
    let mut cost = Vec::with_capacity(ma.len() * mb.len());
    for &i in &support_a {
        for &j in &support_b {
            cost.push(a.distance(a.point(i), b.point(j)));
        }
    }
    sinkhorn::sinkhorn_cost(&ma, &mb, &cost, eps)
}

/// Largest `int phi da - int phi db` over the given test functions (values at the bins).
///
/// Each function is checked to be 1-Lipschitz for the ground metric on every pair of bins.
pub fn dual_certificate(a: &Histogram, b: &Histogram, phis: &[Vec<f64>]) -> Result<f64> {
    a.check_pair(b)?;
    if a.points != b.points {
        return Err(Error::InvalidArgument("dual certificate needs histograms on the same bins".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for phi in phis {
        if phi.len() != a.len() {
            return Err(Error::InvalidArgument("test function has the wrong number of values".into()));
        }
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let dist = a.distance(a.point(i), a.point(j));
                let diff = (phi[i] - phi[j]).abs();
                if diff > dist * (1.0 + 1e-9) + 1e-15 {
                    let slope = if dist > 0.0 { diff / dist } else { f64::INFINITY };
                    return Err(Error::LipschitzViolation(i, j, slope));
                }
            }
        }
        let value: f64 = phi.iter().zip(a.masses.iter().zip(&b.masses)).map(|(p, (ma, mb))| p * (ma - mb)).sum();
        best = best.max(value);
    }
    Ok(best)
}

/// A 1-Lipschitz function on the bins of `a` attaining the exact W1 between `a` and `b`
/// (the c-transform of the optimal sink potentials).
pub fn optimal_potential(a: &Histogram, b: &Histogram) -> Result<Vec<f64>> {
    let exact = w1_exact_detailed(a, b)?;
    let sinks = &exact.solution.sink_potential;
    Ok((0..a.len())
        .map(|k| {
            let p = a.point(k);
            let f = exact
                .support_b
                .iter()
                .zip(sinks)
                .map(|(&j, ps)| ps - a.distance(p, b.point(j)))
                .fold(f64::NEG_INFINITY, f64::max);
            -f
        })
        .collect())
}

/// Periodic shift `x -> rho(x + shift)` by a Fourier phase factor.
pub fn shift_density(rho: &ScalarGrid, shift: &[f64]) -> ScalarGrid {
    let spec = rho.spec;
    let (n, d) = (spec.n(), spec.d());
    let mut data: Vec<Complex64> = rho.values.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft::forward(&mut data, n, d);
    for (idx, c) in data.iter_mut().enumerate() {
        let k = spec.mode(idx);
        let phase: f64 = (0..d).map(|a| k[a] as f64 * shift[a]).sum();
        *c *= Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase);
    }
    fft::inverse(&mut data, n, d);
    ScalarGrid { spec, values: data.into_iter().map(|z| z.re).collect() }
}

/// Density seen in the frame drifting at `drift`: `rho(x + t drift)`.
pub fn renormalized_density(rho: &ScalarGrid, t: f64, drift: &[f64]) -> ScalarGrid {
    let shift: Vec<f64> = drift.iter().map(|u| u * t).collect();
    shift_density(rho, &shift)
}

/// Cumulative trapezoid integral of `sqrt(E)` over a sampled series.
#[derive(Clone, Debug, PartialEq)]
pub struct RootEnergyIntegral {
    times: Vec<f64>,
    roots: Vec<f64>,
    cumulative: Vec<f64>,
}

pub fn jabin_cauchy_bound(series: &[(f64, f64)]) -> Result<RootEnergyIntegral> {
    if let Some(&(t, e)) = series.iter().find(|(_, e)| *e < 0.0 || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("modulated energy {e} at t = {t} is negative")));
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("sample times must increase".into()));
    }
    let times: Vec<f64> = series.iter().map(|p| p.0).collect();
    let roots: Vec<f64> = series.iter().map(|p| p.1.sqrt()).collect();
    let mut cumulative = vec![0.0; series.len()];
    for k in 1..series.len() {
        cumulative[k] = cumulative[k - 1] + 0.5 * (times[k] - times[k - 1]) * (roots[k] + roots[k - 1]);
    }
    Ok(RootEnergyIntegral { times, roots, cumulative })
}

impl RootEnergyIntegral {
    /// Integral between sample indices `i <= j`.
    pub fn between_samples(&self, i: usize, j: usize) -> f64 {
        self.cumulative[j] - self.cumulative[i]
    }

    fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return 0.0;
        }
        if k == self.times.len() {
            return self.cumulative[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let r0 = self.roots[k - 1];
        let r = r0 + (self.roots[k] - r0) * (t - t0) / (t1 - t0);
        self.cumulative[k - 1] + 0.5 * (t - t0) * (r0 + r)
    }

    /// Integral of the piecewise-linear interpolant of `sqrt(E)` over `[s, t]` (clamped to
    /// the sampled range).
    pub fn between(&self, s: f64, t: f64) -> f64 {
        self.cumulative_at(t) - self.cumulative_at(s)
    }
}

/// `int_T^inf sqrt(A exp(-rate t)) dt` for an exponential fit `E(t) = A exp(-rate t)`.
pub fn exponential_tail(amplitude: f64, rate: f64, from: f64) -> f64 {
    2.0 / rate * amplitude.sqrt() * (-0.5 * rate * from).exp()
}
