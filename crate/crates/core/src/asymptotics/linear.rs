//! Closed-form solutions of the kinetic equation with the fluid frozen at a constant `U`.
//!
//! Along `x' = v, v' = U - v` the foot of the characteristic through `(t, x, v)` is
//! `V0 = U + e^t (v - U)` and `X0 = x - t U - (e^t - 1)(v - U)`; the phase-space volume
//! contracts by `e^{-d t}`.

use crate::error::{Error, Result};
use crate::particles::{InitialDataSpec, VelocityProfile};
use crate::spectral::{GridSpec, ScalarGrid};

/// `f(t, x, v) = e^{d t} f0(x - t U - (e^t - 1)(v - U), U + e^t (v - U))`.
pub fn linear_solution(f0: &InitialDataSpec, t: f64, x: &[f64], v: &[f64], drift: &[f64]) -> Result<f64> {
    let d = x.len();
    if v.len() != d || drift.len() != d {
        return Err(Error::InvalidArgument("position, velocity and drift must share the dimension".into()));
    }
    let grow = t.exp_m1();
    let mut x0 = vec![0.0; d];
    let mut v0 = vec![0.0; d];
    for a in 0..d {
        let rel = v[a] - drift[a];
        x0[a] = x[a] - t * drift[a] - grow * rel;
        v0[a] = drift[a] + t.exp() * rel;
    }
    Ok((d as f64 * t).exp() * f0.density(&x0, &v0)?)
}

/// Midpoint nodes and cell volume of the truncated velocity box of `f0`.
pub fn velocity_nodes(f0: &InitialDataSpec, d: usize, per_axis: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    if per_axis == 0 {
        return Err(Error::InvalidArgument("velocity quadrature needs at least one node per axis".into()));
    }
    if let VelocityProfile::Monokinetic { .. } = f0.velocity {
        return Err(Error::UnsupportedFamily("monokinetic profile has no velocity density".into()));
    }
    let (half, _) = f0.velocity.box_half_width(d, f0.tail_tol, f0.v_max)?;
    let center = f0.velocity.center(d);
    let h = 2.0 * half / per_axis as f64;
    let count = per_axis.pow(d as u32);
    let nodes = (0..count)
        .map(|mut k| {
            let mut v = vec![0.0; d];
            for a in (0..d).rev() {
                v[a] = center[a] - half + ((k % per_axis) as f64 + 0.5) * h;
                k /= per_axis;
            }
            v
        })
        .collect();
    Ok((nodes, h.powi(d as i32)))
}

/// Density of the linear solution at time `t`, by quadrature in the initial velocity:
/// `rho(t, x) = int f0(x - t U - (1 - e^{-t})(w - U), w) dw`.
///
/// At `t = infinity` (pass `f64::INFINITY`) this is the drifting-frame profile
/// `int f0(x - w + U, w) dw`; finite `t` are not shifted back by `t U`.
pub fn linear_density(
    f0: &InitialDataSpec,
    t: f64,
    grid: &GridSpec,
    drift: &[f64],
    per_axis: usize,
) -> Result<ScalarGrid> {
    let d = grid.d();
    if drift.len() != d {
        return Err(Error::InvalidArgument(format!("drift has {} components, expected {d}", drift.len())));
    }
    let spread = if t.is_infinite() { 1.0 } else { -(-t).exp_m1() };
    let shift = if t.is_infinite() { 0.0 } else { t };
    if let VelocityProfile::Monokinetic { velocity } = &f0.velocity {
        let values = (0..grid.len())
            .map(|i| {
                let node = grid.node(i);
                let foot: Vec<f64> = (0..d)
                    .map(|a| node[a] - shift * drift[a] - spread * (velocity.get(a).copied().unwrap_or(0.0) - drift[a]))
                    .collect();
                f0.mass * f0.spatial.density(&foot)
            })
            .collect();
        return Ok(ScalarGrid { spec: *grid, values });
    }
    let (nodes, weight) = velocity_nodes(f0, d, per_axis)?;
    let values = (0..grid.len())
        .map(|i| {
            let node = grid.node(i);
            let mut total = 0.0;
            let mut foot = vec![0.0; d];
            for w in &nodes {
                for a in 0..d {
                    foot[a] = node[a] - shift * drift[a] - spread * (w[a] - drift[a]);
                }
                total += f0.density(&foot, w)?;
            }
            Ok(total * weight)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalarGrid { spec: *grid, values })
}

/// `rho_inf(x) = int f0(x - v + U, v) dv`, the limit of the linear solution in the frame
/// moving with `U`.
pub fn linear_asymptotic_profile(
    f0: &InitialDataSpec,
    grid: &GridSpec,
    drift: &[f64],
    per_axis: usize,
) -> Result<ScalarGrid> {
    linear_density(f0, f64::INFINITY, grid, drift, per_axis)
}
