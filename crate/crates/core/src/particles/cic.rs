//! Cloud-in-cell (multilinear) deposition and interpolation.
//!
//! Grid node `i` sits at `x = i / n`. Deposition and interpolation use the same stencil,
//! so `<deposit(delta_p), g>_grid = interpolate(g, p)` holds exactly.

use rayon::prelude::*;

use super::{ParticleEnsemble, VelocitySampler};
use crate::spectral::{FourierField, GridSpec, ScalarGrid, VectorGrid};

const CHUNK: usize = 4096;

/// Corner node indices and multilinear weights of the stencil around `x`.
pub(crate) fn stencil(spec: &GridSpec, x: &[f64]) -> ([usize; 8], [f64; 8], usize) {
    let n = spec.n();
    let d = spec.d();
    let mut base = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..d {
        let s = x[a] * n as f64;
        let i0 = s.floor();
        frac[a] = s - i0;
        base[a] = (i0 as i64).rem_euclid(n as i64) as usize;
    }
    let corners = 1usize << d;
    let mut idx = [0usize; 8];
    let mut wts = [0.0f64; 8];
    for c in 0..corners {
        let mut flat = 0usize;
        let mut wt = 1.0;
        for a in 0..d {
            let hi = (c >> (d - 1 - a)) & 1;
            let i = if hi == 1 { (base[a] + 1) % n } else { base[a] };
            flat = flat * n + i;
            wt *= if hi == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        idx[c] = flat;
        wts[c] = wt;
    }
    (idx, wts, corners)
}

/// Deposit `w_i * value_i` (a `width`-vector per particle) as a density on the grid.
///
/// Particles are processed in fixed-size chunks whose partial grids are summed in chunk
/// order, so the result does not depend on the thread count.
pub fn deposit_with<F>(particles: &ParticleEnsemble, spec: &GridSpec, width: usize, value: F) -> Vec<Vec<f64>>
where
    F: Fn(usize) -> [f64; 4] + Sync,
{
    let len = spec.len();
    let d = particles.dim();
    let partials: Vec<Vec<f64>> = (0..particles.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; width * len];
            for &i in chunk {
                let (idx, wts, count) = stencil(spec, &particles.x[i * d..(i + 1) * d]);
                let val = value(i);
                let w = particles.w[i];
                for c in 0..count {
                    let k = wts[c] * w;
                    for (comp, vc) in val.iter().take(width).enumerate() {
                        acc[comp * len + idx[c]] += k * vc;
                    }
                }
            }
            acc
        })
        .collect();
    let inv_vol = 1.0 / spec.cell_volume();
    let mut total = vec![0.0; width * len];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total.chunks(len).map(|c| c.iter().map(|v| v * inv_vol).collect()).collect()
}

/// Deposited density and current.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub rho: ScalarGrid,
    pub j: VectorGrid,
}

/// Deposit `rho = sum w_i S(x - x_i)` and `j = sum w_i v_i S(x - x_i)` by cloud-in-cell.
pub fn deposit(particles: &ParticleEnsemble, spec: &GridSpec) -> Moments {
    let d = spec.d();
    let mut grids = deposit_with(particles, spec, d + 1, |i| {
        let mut out = [1.0, 0.0, 0.0, 0.0];
        out[1..=d].copy_from_slice(particles.velocity(i));
        out
    });
    let rho = ScalarGrid { spec: *spec, values: grids.remove(0) };
    Moments { rho, j: VectorGrid { spec: *spec, comps: grids } }
}

/// Multilinear interpolation of physical grid samples.
#[derive(Clone, Debug)]
pub struct CicSampler {
    pub grid: VectorGrid,
}

impl CicSampler {
    pub fn new(grid: VectorGrid) -> Self {
        Self { grid }
    }

    pub fn from_field(u: &FourierField) -> Self {
        Self { grid: u.to_physical() }
    }
}

impl VelocitySampler for CicSampler {
    fn dim(&self) -> usize {
        self.grid.spec.d()
    }

    fn sample(&self, x: &[f64]) -> [f64; 3] {
        let (idx, wts, count) = stencil(&self.grid.spec, x);
        let mut out = [0.0; 3];
        for (a, comp) in self.grid.comps.iter().enumerate() {
            out[a] = (0..count).map(|c| wts[c] * comp[idx[c]]).sum();
        }
        out
    }
}

/// Velocities `u(x_i)` at the particles, flat with stride `d`.
pub fn interpolate(u: &FourierField, particles: &ParticleEnsemble) -> Vec<f64> {
    let sampler = CicSampler::from_field(u);
    let d = particles.dim();
    (0..particles.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let s = sampler.sample(particles.position(i));
            s.into_iter().take(d)
        })
        .collect()
}
