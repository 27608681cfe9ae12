//! The asymptotic density profile `rho_inf`.

use rayon::prelude::*;

use super::history::VelocityHistory;
use super::linear::velocity_nodes;
use super::picard::{jacobian_a, limit_position, PicardOptions};
use crate::error::{Error, Result};
use crate::particles::{deposit, InitialDataSpec, ParticleEnsemble};
use crate::spectral::{GridSpec, ScalarGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileOptions {
    /// Velocity quadrature nodes per axis over the truncated box of `f0`.
    pub velocity_nodes: usize,
    /// Finite-difference step for `D_v Y`.
    pub h: f64,
    pub picard: PicardOptions,
    /// Trapezoid grid in time; the snapshot times when `None`.
    pub s_grid: Option<Vec<f64>>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { velocity_nodes: 16, h: 1e-4, picard: PicardOptions::default(), s_grid: None }
    }
}

/// `rho_inf(x) = int f0(Y^0_{x,v}, v) |det A(x, v)| dv` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileResult {
    pub rho_inf: ScalarGrid,
    /// Velocity quadrature nodes, `d` entries each.
    pub velocities: Vec<Vec<f64>>,
    /// `|det A|` at `(grid node i, velocity node k)`, stored at `i * velocities.len() + k`.
    pub det_a: Vec<f64>,
    /// Largest Picard iteration count over all solves.
    pub picard_iters: usize,
    /// Largest Picard residual over all solves.
    pub residual: f64,
    pub mass: f64,
}

fn time_grid(history: &VelocityHistory, opts: &ProfileOptions) -> Vec<f64> {
    opts.s_grid.clone().unwrap_or_else(|| history.times().to_vec())
}

/// Evaluate the profile formula at every grid node.
///
/// The velocity integral is a midpoint rule on the truncated box of `f0`; `A` and `Y^0`
/// come from [`jacobian_a`] at every quadrature node.
pub fn rho_infinity(
    history: &VelocityHistory,
    f0: &InitialDataSpec,
    grid: &GridSpec,
    opts: &ProfileOptions,
) -> Result<ProfileResult> {
    let d = grid.d();
    if history.dim() != d {
        return Err(Error::InvalidArgument("history and grid dimensions differ".into()));
    }
    let s_grid = time_grid(history, opts);
    let (velocities, weight) = velocity_nodes(f0, d, opts.velocity_nodes)?;
    let per_node: Vec<(f64, Vec<f64>, usize, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = &grid.node(i)[..d];
            let mut total = 0.0;
            let mut dets = Vec::with_capacity(velocities.len());
            let mut iters = 0;
            let mut residual: f64 = 0.0;
            for v in &velocities {
                let report = jacobian_a(history, &s_grid, x, v, opts.h, &opts.picard)?;
                let foot = report.path.foot();
                total += f0.density(&foot[..d], v)? * report.det_abs;
                dets.push(report.det_abs);
                iters = iters.max(report.max_iterations);
                residual = residual.max(report.max_residual);
            }
            Ok((total * weight, dets, iters, residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(grid.len());
    let mut det_a = Vec::with_capacity(grid.len() * velocities.len());
    let mut picard_iters = 0;
    let mut residual: f64 = 0.0;
    for (value, dets, iters, res) in per_node {
        values.push(value);
        det_a.extend(dets);
        picard_iters = picard_iters.max(iters);
        residual = residual.max(res);
    }
    let rho_inf = ScalarGrid { spec: *grid, values };
    let mass = rho_inf.integral();
    Ok(ProfileResult { rho_inf, velocities, det_a, picard_iters, residual, mass })
}

/// Image of an initial ensemble under the limit map `(y, v) -> x`.
#[derive(Clone, Debug)]
pub struct PushforwardResult {
    /// Limit positions (drifting frame) with the original weights; velocities set to the drift.
    pub limit: ParticleEnsemble,
    /// Cloud-in-cell deposit of `limit`.
    pub density: ScalarGrid,
    pub picard_iters: usize,
    pub residual: f64,
}

/// Push every particle of `initial` to its limit position in the drifting frame.
///
/// Mass is preserved exactly, and the deposit shares the smoothing of deposited
/// simulation densities, which makes this the form to compare against `rho_f` of a run.
pub fn rho_infinity_pushforward(
    history: &VelocityHistory,
    initial: &ParticleEnsemble,
    grid: &GridSpec,
    opts: &ProfileOptions,
) -> Result<PushforwardResult> {
    let d = initial.dim();
    if history.dim() != d || grid.d() != d {
        return Err(Error::InvalidArgument("history, ensemble and grid dimensions differ".into()));
    }
    let s_grid = time_grid(history, opts);
    let solved: Vec<([f64; 3], usize, f64)> = (0..initial.len())
        .into_par_iter()
        .map(|p| {
            let point = limit_position(history, &s_grid, initial.position(p), initial.velocity(p), &opts.picard)?;
            Ok((point.x, point.path.iterations, point.path.residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Vec::with_capacity(initial.len() * d);
    let mut picard_iters = 0;
    let mut residual: f64 = 0.0;
    for (pos, iters, res) in &solved {
        x.extend_from_slice(&pos[..d]);
        picard_iters = picard_iters.max(*iters);
        residual = residual.max(*res);
    }
    let v = history.drift().repeat(initial.len());
    let mut limit = ParticleEnsemble::new(d, x, v, initial.weights().to_vec())?;
    limit.meta = initial.meta.clone();
    let density = deposit(&limit, grid).rho;
    Ok(PushforwardResult { limit, density, picard_iters, residual })
}
