//! Infinite-horizon characteristics as fixed points of an integral equation.
//!
//! A trajectory is labelled by its limit position `x` in the frame moving with the drift
//! `U` and by its initial velocity `v`. Its position `Y^s` at time `s` solves
//!
//! `Y^s = x - e^{-s} v + U (e^{-s} + s) - int_0^inf K(s, tau) (u(tau, Y^tau) - U) dtau`
//!
//! with `K(s, tau) = e^{tau - s}` for `tau <= s` and `1` afterwards.

use super::history::VelocityHistory;
use super::linalg::{self, Mat};
use crate::error::{Error, Result};
use crate::particles::wrap_unit;

/// Stopping rule of the fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    /// Stop once the sup-norm change of the path drops below this value.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 200 }
    }
}

/// Converged path `s_k -> Y^{s_k}` (unwrapped coordinates).
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicPath {
    pub s: Vec<f64>,
    pub y: Vec<[f64; 3]>,
    pub iterations: usize,
    /// Sup-norm distance between the returned path and its image under the integral map.
    pub residual: f64,
}

impl CharacteristicPath {
    /// `Y^0`, the foot of the characteristic at time zero.
    pub fn foot(&self) -> [f64; 3] {
        self.y[0]
    }
}

/// Validate a quadrature grid: starts at 0, increasing, reaches the last snapshot.
fn check_grid(history: &VelocityHistory, s_grid: &[f64]) -> Result<()> {
    if history.start() != 0.0 {
        return Err(Error::HistoryRange { t: 0.0, start: history.start(), end: history.end() });
    }
    if s_grid.len() < 2 || s_grid[0] != 0.0 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must start at 0 and increase strictly".into()));
    }
    let last = *s_grid.last().expect("checked length");
    if last < history.end() {
        return Err(Error::InvalidArgument(format!(
            "time grid ends at {last} before the last snapshot {}",
            history.end()
        )));
    }
    Ok(())
}

/// Contraction constant `2 int ||grad u||_inf` of the integral map; must be below 1.
pub fn contraction_constant(history: &VelocityHistory) -> Result<f64> {
    let k = 2.0 * history.grad_integral();
    if k < 1.0 {
        Ok(k)
    } else {
        Err(Error::ContractionFailed(k))
    }
}

/// Fluctuation `u(s_k, Y_k) - U` along a path.
fn deviation(history: &VelocityHistory, s_grid: &[f64], path: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let d = history.dim();
    let drift = history.drift();
    s_grid
        .iter()
        .zip(path)
        .map(|(&s, y)| {
            let mut g = history.velocity(s, &y[..d])?;
            for a in 0..d {
                g[a] -= drift[a];
            }
            Ok(g)
        })
        .collect()
}

/// Trapezoid values of `e^{-s_k} int_0^{s_k} e^tau g` and of `int_0^{s_k} g`.
fn kernel_integrals(s_grid: &[f64], g: &[[f64; 3]], d: usize) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let m = s_grid.len();
    let mut damped = vec![[0.0; 3]; m];
    let mut plain = vec![[0.0; 3]; m];
    for k in 1..m {
        let h = s_grid[k] - s_grid[k - 1];
        let decay = (-h).exp();
        for a in 0..d {
            damped[k][a] = decay * damped[k - 1][a] + 0.5 * h * (decay * g[k - 1][a] + g[k][a]);
            plain[k][a] = plain[k - 1][a] + 0.5 * h * (g[k - 1][a] + g[k][a]);
        }
    }
    (damped, plain)
}

fn sup_distance(a: &[[f64; 3]], b: &[[f64; 3]], d: usize) -> f64 {
    a.iter().zip(b).map(|(p, q)| (0..d).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Iterate `map` from `seed` until the path moves by less than `opts.tol`.
fn iterate(
    d: usize,
    seed: Vec<[f64; 3]>,
    opts: &PicardOptions,
    map: impl Fn(&[[f64; 3]]) -> Result<Vec<[f64; 3]>>,
) -> Result<(Vec<[f64; 3]>, usize, f64)> {
    let mut path = seed;
    for iteration in 1..=opts.max_iterations {
        let next = map(&path)?;
        let change = sup_distance(&next, &path, d);
        path = next;
        if !change.is_finite() {
            return Err(Error::NonFinite("Picard iterate"));
        }
        if change < opts.tol {
            let residual = sup_distance(&map(&path)?, &path, d);
            return Ok((path, iteration, residual));
        }
    }
    Err(Error::NotConverged { what: "Picard iteration", iterations: opts.max_iterations })
}

/// Path `Y^s` of the trajectory with limit position `x` and initial velocity `v`.
///
/// `s_grid` is the trapezoid grid in time; it must start at 0 and reach the last snapshot.
/// The iteration starts from the drift-only path `x - e^{-s} v + U (e^{-s} + s)`.
pub fn picard_y_infinity(
    history: &VelocityHistory,
    s_grid: &[f64],
    x: &[f64],
    v: &[f64],
    opts: &PicardOptions,
) -> Result<CharacteristicPath> {
    check_grid(history, s_grid)?;
    contraction_constant(history)?;
    let d = history.dim();
    let drift = history.drift();
    let base: Vec<[f64; 3]> = s_grid
        .iter()
        .map(|&s| {
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = x[a] - (-s).exp() * v[a] + drift[a] * ((-s).exp() + s);
            }
            y
        })
        .collect();
    let map = |path: &[[f64; 3]]| -> Result<Vec<[f64; 3]>> {
        let g = deviation(history, s_grid, path)?;
        let (damped, plain) = kernel_integrals(s_grid, &g, d);
        let total = *plain.last().expect("grid has two points");
        Ok(base
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let mut y = *b;
                for a in 0..d {
                    y[a] -= damped[k][a] + (total[a] - plain[k][a]);
                }
                y
            })
            .collect())
    };
    let (y, iterations, residual) = iterate(d, base.clone(), opts, map)?;
    Ok(CharacteristicPath { s: s_grid.to_vec(), y, iterations, residual })
}

/// Limit position of the trajectory that starts at `(y0, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitPoint {
    /// Limit position in the drifting frame, wrapped to the unit torus.
    pub x: [f64; 3],
    pub path: CharacteristicPath,
}

/// Solve the same integral equation parametrized by the initial point instead of the
/// limit position:
///
/// `Y^s = y0 + (1 - e^{-s}) v + U (s - 1 + e^{-s}) + int_0^s (1 - e^{tau - s}) (u - U) dtau`
///
/// and return `x = y0 + v - U + int_0^inf (u - U)`.
pub fn limit_position(
    history: &VelocityHistory,
    s_grid: &[f64],
    y0: &[f64],
    v: &[f64],
    opts: &PicardOptions,
) -> Result<LimitPoint> {
    check_grid(history, s_grid)?;
    let d = history.dim();
    let drift = history.drift();
    let base: Vec<[f64; 3]> = s_grid
        .iter()
        .map(|&s| {
            let mut y = [0.0; 3];
            for a in 0..d {
                y[a] = y0[a] - (-s).exp_m1() * v[a] + drift[a] * (s + (-s).exp_m1());
            }
            y
        })
        .collect();
    let map = |path: &[[f64; 3]]| -> Result<Vec<[f64; 3]>> {
        let g = deviation(history, s_grid, path)?;
        let (damped, plain) = kernel_integrals(s_grid, &g, d);
        Ok(base
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let mut y = *b;
                for a in 0..d {
                    y[a] += plain[k][a] - damped[k][a];
                }
                y
            })
            .collect())
    };
    let (y, iterations, residual) = iterate(d, base.clone(), opts, map)?;
    let g = deviation(history, s_grid, &y)?;
    let (_, plain) = kernel_integrals(s_grid, &g, d);
    let total = plain.last().expect("grid has two points");
    let mut x = [0.0; 3];
    for a in 0..d {
        x[a] = wrap_unit(y0[a] + v[a] - drift[a] + total[a]);
    }
    Ok(LimitPoint { x, path: CharacteristicPath { s: s_grid.to_vec(), y, iterations, residual } })
}

/// Jacobian field of the limit map and the derivative bounds along the path.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    /// `A = I + int_0^inf e^tau grad u(tau, Y^tau) D_v Y^tau dtau`.
    pub matrix: Mat,
    pub det_abs: f64,
    /// `D_x Y^0`, the Jacobian of `x -> Y^0_{x,v}`.
    pub d_x_foot: Mat,
    pub det_d_x_foot: f64,
    /// `|D_x Y^0 - I|` (operator 2-norm); at most 1/9 certifies `det D_x Y^0 >= 1/2`.
    pub foot_deviation: f64,
    /// `max_s |D_x Y^s|` (operator 2-norm).
    pub max_d_x: f64,
    /// `max_s |e^s D_v Y^s|` (operator 2-norm).
    pub max_scaled_d_v: f64,
    pub path: CharacteristicPath,
    /// Largest Picard residual over the base path and all stencil paths.
    pub max_residual: f64,
    pub max_iterations: usize,
}

/// `A(inf, x, v)` with `D_v Y` and `D_x Y` from central differences of re-solved fixed
/// points at `v +- h e_b` and `x +- h e_b`.
pub fn jacobian_a(
    history: &VelocityHistory,
    s_grid: &[f64],
    x: &[f64],
    v: &[f64],
    h: f64,
    opts: &PicardOptions,
) -> Result<JacobianReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let d = history.dim();
    let path = picard_y_infinity(history, s_grid, x, v, opts)?;
    let m = s_grid.len();
    let mut max_residual = path.residual;
    let mut max_iterations = path.iterations;
    // columns of D_v Y^s and D_x Y^s
    let mut d_v = vec![[[0.0; 3]; 3]; m];
    let mut d_x = vec![[[0.0; 3]; 3]; m];
    for b in 0..d {
        for (target, shift_velocity) in [(&mut d_v, true), (&mut d_x, false)] {
            let mut paths = Vec::with_capacity(2);
            for sign in [1.0, -1.0] {
                let (mut xs, mut vs) = ([0.0; 3], [0.0; 3]);
                xs[..d].copy_from_slice(&x[..d]);
                vs[..d].copy_from_slice(&v[..d]);
                if shift_velocity {
                    vs[b] += sign * h;
                } else {
                    xs[b] += sign * h;
                }
                let p = picard_y_infinity(history, s_grid, &xs[..d], &vs[..d], opts)?;
                max_residual = max_residual.max(p.residual);
                max_iterations = max_iterations.max(p.iterations);
                paths.push(p);
            }
            for k in 0..m {
                for a in 0..d {
                    target[k][a][b] = (paths[0].y[k][a] - paths[1].y[k][a]) / (2.0 * h);
                }
            }
        }
    }
    // trapezoid for int e^tau grad u D_v Y, written with the bounded factor e^tau D_v Y
    let mut matrix = linalg::identity(d);
    let mut prev: Option<(f64, Mat)> = None;
    let mut max_d_x: f64 = 0.0;
    let mut max_scaled_d_v: f64 = 0.0;
    for k in 0..m {
        let s = s_grid[k];
        let mut scaled = d_v[k];
        for row in scaled.iter_mut().take(d) {
            for entry in row.iter_mut().take(d) {
                *entry *= s.exp();
            }
        }
        max_scaled_d_v = max_scaled_d_v.max(linalg::operator_norm(&scaled, d));
        max_d_x = max_d_x.max(linalg::operator_norm(&d_x[k], d));
        let grad = history.sample(s, &path.y[k][..d])?.grad;
        let integrand = linalg::mul(&grad, &scaled, d);
        if let Some((s_prev, f_prev)) = prev {
            let w = 0.5 * (s - s_prev);
            for a in 0..d {
                for b in 0..d {
                    matrix[a][b] += w * (f_prev[a][b] + integrand[a][b]);
                }
            }
        }
        prev = Some((s, integrand));
    }
    let det_abs = linalg::det(&matrix, d).abs();
    let d_x_foot = d_x[0];
    Ok(JacobianReport {
        matrix,
        det_abs,
        d_x_foot,
        det_d_x_foot: linalg::det(&d_x_foot, d),
        foot_deviation: linalg::operator_norm(&linalg::minus_identity(&d_x_foot, d), d),
        max_d_x,
        max_scaled_d_v,
        path,
        max_residual,
        max_iterations,
    })
}
