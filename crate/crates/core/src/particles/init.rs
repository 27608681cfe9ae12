//! Closed-form initial data and their deterministic particle discretization.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{compensated_sum, EnsembleMeta, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::spectral::{leray_project, sobolev_norm, FourierField, GridSpec, SobolevSpec, VectorGrid};

/// Spatial factor `sigma(x)` of `f0`, normalized to unit mean.
#[derive(Clone, Debug, PartialEq)]
pub enum SpatialProfile {
    Uniform,
    /// `1 + amplitude * cos(2 pi wavenumber x_1)`, requires `|amplitude| < 1`.
    Cosine {
        amplitude: f64,
        wavenumber: i64,
    },
}

/// Velocity factor `g(v)` of `f0`, normalized to unit mass.
#[derive(Clone, Debug, PartialEq)]
pub enum VelocityProfile {
    /// Isotropic Maxwellian with standard deviation `theta` per axis.
    Gaussian { theta: f64, mean: Vec<f64> },
    /// `c / (1 + |v|^q)`, the slowest decay with finite `N_q`.
    PolyTail { q: f64 },
    /// `c (|v| / radius)^power` on the ball of the given radius.
    Compact { radius: f64, power: f64 },
    /// Dirac mass at a single velocity (no pointwise density).
    Monokinetic { velocity: Vec<f64> },
}

/// Initial fluid velocity.
#[derive(Clone, Debug, PartialEq)]
pub enum FluidInit {
    Zero,
    /// Random divergence-free field on `0 < max|k_i| <= kmax`, rescaled to the given
    /// homogeneous `H^{1/2}` norm.
    Random {
        h_half_norm: f64,
        kmax: usize,
    },
    /// `amplitude (sin X cos Y, -cos X sin Y)` (times `cos Z` in 3-d), `X = 2 pi x_1`.
    TaylorGreen {
        amplitude: f64,
    },
    /// `(amplitude sin(2 pi x_2), 0, ...)`.
    Shear {
        amplitude: f64,
    },
}

/// Everything needed to build the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialDataSpec {
    pub spatial: SpatialProfile,
    pub velocity: VelocityProfile,
    /// Total mass of `f0`; 1 for the coupled problem, 0 for pure Navier-Stokes.
    pub mass: f64,
    /// Particles per grid cell along each spatial axis.
    pub per_cell: usize,
    /// Velocity lattice points per axis.
    pub nv: usize,
    /// Target tail mass used to size the velocity box.
    pub tail_tol: f64,
    /// Fixed half-width of the velocity box, overriding the tail rule.
    pub v_max: Option<f64>,
    pub fluid: FluidInit,
    pub seed: u64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            spatial: SpatialProfile::Uniform,
            velocity: VelocityProfile::Gaussian { theta: 0.2, mean: vec![0.0, 0.0] },
            mass: 1.0,
            per_cell: 1,
            nv: 8,
            tail_tol: 1e-8,
            v_max: None,
            fluid: FluidInit::Zero,
            seed: 0,
        }
    }
}

/// Surface area of the unit sphere in `R^d`.
pub(crate) fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

impl SpatialProfile {
    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            SpatialProfile::Uniform => 1.0,
            SpatialProfile::Cosine { amplitude, wavenumber } => {
                1.0 + amplitude * (2.0 * PI * *wavenumber as f64 * x[0]).cos()
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            SpatialProfile::Uniform => 1.0,
            SpatialProfile::Cosine { amplitude, .. } => 1.0 + amplitude.abs(),
        }
    }
}

impl VelocityProfile {
    pub fn name(&self) -> &'static str {
        match self {
            VelocityProfile::Gaussian { .. } => "gaussian",
            VelocityProfile::PolyTail { .. } => "polytail",
            VelocityProfile::Compact { .. } => "compact",
            VelocityProfile::Monokinetic { .. } => "monokinetic",
        }
    }

    /// Center of the velocity box.
    pub fn center(&self, d: usize) -> Vec<f64> {
        match self {
            VelocityProfile::Gaussian { mean, .. } => padded(mean, d),
            VelocityProfile::Monokinetic { velocity } => padded(velocity, d),
            _ => vec![0.0; d],
        }
    }

    fn normalization(&self, d: usize) -> Result<f64> {
        match *self {
            VelocityProfile::Gaussian { theta, .. } => Ok((2.0 * PI * theta * theta).powf(-0.5 * d as f64)),
            VelocityProfile::PolyTail { q } => {
                if q <= d as f64 {
                    return Err(Error::InvalidArgument(format!(
                        "tail exponent {q} is not integrable in dimension {d}"
                    )));
                }
                let radial = PI / (q * (d as f64 * PI / q).sin());
                Ok(1.0 / (sphere_area(d) * radial))
            }
            VelocityProfile::Compact { radius, power } => {
                Ok((power + d as f64) / (sphere_area(d) * radius.powi(d as i32)))
            }
            VelocityProfile::Monokinetic { .. } => {
                Err(Error::UnsupportedFamily("monokinetic profile has no density".into()))
            }
        }
    }

    /// Pointwise density `g(v)`.
    pub fn density(&self, v: &[f64]) -> Result<f64> {
        let d = v.len();
        let c = self.normalization(d)?;
        Ok(match self {
            VelocityProfile::Gaussian { theta, mean } => {
                let m = padded(mean, d);
                let r2: f64 = v.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum();
                c * (-r2 / (2.0 * theta * theta)).exp()
            }
            VelocityProfile::PolyTail { q } => c / (1.0 + norm(v).powf(*q)),
            VelocityProfile::Compact { radius, power } => {
                let r = norm(v);
                if r > *radius {
                    0.0
                } else {
                    c * (r / radius).powf(*power)
                }
            }
            VelocityProfile::Monokinetic { .. } => unreachable!("normalization rejects monokinetic"),
        })
    }

    /// Half-width of the velocity box and an upper bound on the mass outside it.
    pub fn box_half_width(&self, d: usize, tail_tol: f64, fixed: Option<f64>) -> Result<(f64, f64)> {
        match *self {
            VelocityProfile::Gaussian { theta, .. } => {
                // each axis loses at most erfc(L / (theta sqrt 2)) <= exp(-L^2 / (2 theta^2))
                let half = fixed.unwrap_or_else(|| theta * (2.0 * (d as f64 / tail_tol).ln()).sqrt());
                Ok((half, d as f64 * (-half * half / (2.0 * theta * theta)).exp()))
            }
            VelocityProfile::PolyTail { q } => {
                // the box contains the ball of radius L, outside of which the mass is
                // at most c S L^(d-q) / (q - d)
                let c = self.normalization(d)?;
                let k = c * sphere_area(d) / (q - d as f64);
                let half = fixed.unwrap_or_else(|| (k / tail_tol).powf(1.0 / (q - d as f64)));
                Ok((half, k * half.powf(d as f64 - q)))
            }
            VelocityProfile::Compact { radius, .. } => {
                let half = fixed.unwrap_or(radius);
                let tail = if half >= radius { 0.0 } else { f64::NAN };
                Ok((half, tail))
            }
            VelocityProfile::Monokinetic { .. } => Ok((0.0, 0.0)),
        }
    }
}

fn padded(v: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (o, x) in out.iter_mut().zip(v) {
        *o = *x;
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl InitialDataSpec {
    /// `f0(x, v)` in closed form.
    pub fn density(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        if self.mass == 0.0 {
            return Ok(0.0);
        }
        Ok(self.mass * self.spatial.density(x) * self.velocity.density(v)?)
    }

    /// Deterministic phase-space lattice: `per_cell^d` cell-centered positions per grid
    /// cell times `nv^d` cell-centered velocities, weighted by `f0` and normalized to
    /// the configured mass.
    pub fn build_particles(&self, grid: &GridSpec) -> Result<ParticleEnsemble> {
        let d = grid.d();
        if self.mass == 0.0 {
            let mut empty = ParticleEnsemble::empty(d);
            empty.meta.seed = self.seed;
            return Ok(empty);
        }
        if self.per_cell == 0 || self.nv == 0 {
            return Err(Error::InvalidArgument("particle lattice needs per_cell >= 1 and nv >= 1".into()));
        }
        let (half, tail) = self.velocity.box_half_width(d, self.tail_tol, self.v_max)?;
        let center = self.velocity.center(d);
        let mono = matches!(self.velocity, VelocityProfile::Monokinetic { .. });
        let nv = if mono { 1 } else { self.nv };
        let m = grid.n() * self.per_cell;
        let n_x = m.pow(d as u32);
        let n_v = nv.pow(d as u32);
        let dv = 2.0 * half / nv as f64;
        let mut velocities = Vec::with_capacity(n_v * d);
        let mut vweights = Vec::with_capacity(n_v);
        for iv in 0..n_v {
            let mut vel = vec![0.0; d];
            let mut rem = iv;
            for a in (0..d).rev() {
                let k = rem % nv;
                rem /= nv;
                vel[a] = if mono { center[a] } else { center[a] - half + (k as f64 + 0.5) * dv };
            }
            let g = if mono { 1.0 } else { self.velocity.density(&vel)? };
            if g > 0.0 {
                velocities.extend_from_slice(&vel);
                vweights.push(g);
            }
        }
        let mut x = Vec::with_capacity(n_x * vweights.len() * d);
        let mut v = Vec::with_capacity(n_x * vweights.len() * d);
        let mut w = Vec::with_capacity(n_x * vweights.len());
        for ix in 0..n_x {
            let mut pos = vec![0.0; d];
            let mut rem = ix;
            for a in (0..d).rev() {
                pos[a] = ((rem % m) as f64 + 0.5) / m as f64;
                rem /= m;
            }
            let sigma = self.spatial.density(&pos);
            for (k, g) in vweights.iter().enumerate() {
                x.extend_from_slice(&pos);
                v.extend_from_slice(&velocities[k * d..(k + 1) * d]);
                w.push(sigma * g);
            }
        }
        let raw: f64 = w.iter().sum();
        if !(raw > 0.0) {
            return Err(Error::InvalidArgument("initial density vanishes on the particle lattice".into()));
        }
        w.iter_mut().for_each(|wi| *wi *= self.mass / raw);
        // make the compensated total hit the mass exactly
        if let Some((last, rest)) = w.split_last_mut() {
            *last = (self.mass - compensated_sum(rest.iter().copied())).max(0.0);
        }
        for _ in 0..4 {
            let total = compensated_sum(w.iter().copied());
            if total == self.mass {
                break;
            }
            if let Some(last) = w.last_mut() {
                *last = (*last + (self.mass - total)).max(0.0);
            }
        }
        let mut ens = ParticleEnsemble::new(d, x, v, w)?;
        ens.meta = EnsembleMeta {
            q: match self.velocity {
                VelocityProfile::PolyTail { q } => q,
                _ => f64::NAN,
            },
            v_max: half,
            seed: self.seed,
            tail_mass: tail,
        };
        Ok(ens)
    }
}

/// Maximize a unimodal-near-the-top function on `[lo, hi]`: coarse scan then golden section.
pub(crate) fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const SCAN: usize = 4000;
    let h = (hi - lo) / SCAN as f64;
    let (best, _) = (0..=SCAN).map(|i| (i, f(lo + i as f64 * h))).fold((0, f64::NEG_INFINITY), |acc, (i, y)| {
        if y > acc.1 {
            (i, y)
        } else {
            acc
        }
    });
    let mut a = lo + best.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best + 1) as f64 * h).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - ratio * (b - a);
        let e = a + ratio * (b - a);
        if f(c) >= f(e) {
            b = e;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).max(f(lo)).max(f(lo + best as f64 * h))
}

/// `N_q(f0) = sup (1 + |v|^q) f0(x, v)`.
pub fn estimate_nq(spec: &InitialDataSpec, q: f64, d: usize) -> Result<f64> {
    if spec.mass == 0.0 {
        return Ok(0.0);
    }
    let scale = spec.mass * spec.spatial.sup() * spec.velocity.normalization(d)?;
    let sup_v = match &spec.velocity {
        VelocityProfile::Gaussian { theta, mean } => {
            // the sup lies on the line through 0 and the mean, on the side of the mean
            let m = norm(&padded(mean, d));
            let theta = *theta;
            let h = |s: f64| (1.0 + s.abs().powf(q)) * (-(s - m).powi(2) / (2.0 * theta * theta)).exp();
            let hi = m + theta * ((2.0 * q).sqrt() + 12.0);
            maximize_1d(h, 0.0, hi)
        }
        VelocityProfile::PolyTail { q: p } => {
            let p = *p;
            if q > p {
                f64::INFINITY
            } else if q == p {
                1.0
            } else {
                // (1 + r^q) / (1 + r^p) in log r
                let h = |s: f64| {
                    let r = s.exp();
                    (1.0 + r.powf(q)) / (1.0 + r.powf(p))
                };
                maximize_1d(h, -20.0, 20.0).max(1.0)
            }
        }
        VelocityProfile::Compact { radius, .. } => 1.0 + radius.powf(q),
        VelocityProfile::Monokinetic { .. } => unreachable!("normalization rejects monokinetic"),
    };
    Ok(scale * sup_v)
}

/// Initial fluid velocity on the grid: divergence-free, dealiased, Hermitian.
pub fn sample_fluid(init: &FluidInit, grid: &GridSpec, seed: u64) -> Result<FourierField> {
    let d = grid.d();
    let field = match *init {
        FluidInit::Zero => FourierField::zeros(*grid),
        FluidInit::Random { h_half_norm, kmax } => {
            if kmax == 0 || kmax > grid.cutoff() {
                return Err(Error::InvalidArgument(format!(
                    "random field band {kmax} must lie in 1..={}",
                    grid.cutoff()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut field = FourierField::zeros(*grid);
            for idx in 1..grid.len() {
                let k = grid.mode(idx);
                let kmax_i = kmax as i64;
                if k.iter().take(d).any(|ka| ka.abs() > kmax_i) {
                    continue;
                }
                // one representative of each {k, -k} pair: first nonzero component positive
                let lead = k.iter().take(d).find(|ka| **ka != 0).copied().unwrap_or(0);
                if lead <= 0 {
                    continue;
                }
                let amp: Vec<Complex64> = (0..d)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im)
                    })
                    .collect();
                field.set_mode(&k[..d], &amp);
            }
            let field = leray_project(&field);
            let current = sobolev_norm(&field, SobolevSpec::homogeneous(0.5));
            if current == 0.0 {
                field
            } else {
                field.scaled(h_half_norm / current)
            }
        }
        FluidInit::TaylorGreen { amplitude } => {
            let mut grid_vals = VectorGrid::zeros(*grid);
            for i in 0..grid.len() {
                let x = grid.node(i);
                let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
                let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
                let cz = if d == 3 { (2.0 * PI * x[2]).cos() } else { 1.0 };
                grid_vals.comps[0][i] = amplitude * sx * cy * cz;
                grid_vals.comps[1][i] = -amplitude * cx * sy * cz;
            }
            leray_project(&FourierField::from_physical(&grid_vals))
        }
        FluidInit::Shear { amplitude } => {
            let mut grid_vals = VectorGrid::zeros(*grid);
            for i in 0..grid.len() {
                grid_vals.comps[0][i] = amplitude * (2.0 * PI * grid.node(i)[1]).sin();
            }
            leray_project(&FourierField::from_physical(&grid_vals))
        }
    };
    let mut field = field.dealiased();
    field.set_div_free(true);
    Ok(field)
}
