//! Backward characteristics and the velocity change of variables `v -> V(0; t, x, v)`.

use super::history::VelocityHistory;
use super::linalg::{self, Mat};
use crate::error::{Error, Result};
use crate::particles::pull_back_one;

/// How the Jacobian `D_v V(0; t, x, v)` is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JacobianMethod {
    /// Central differences in `v` with step `h`.
    FiniteDifference { h: f64 },
    /// Tangent map propagated alongside the backward steps.
    Variational,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StraightenOptions {
    /// Largest backward step.
    pub max_dt: f64,
    pub method: JacobianMethod,
}

impl Default for StraightenOptions {
    fn default() -> Self {
        Self { max_dt: 0.01, method: JacobianMethod::FiniteDifference { h: 1e-4 } }
    }
}

/// Foot `(X(0), V(0))` of the characteristic through `(t, x, v)` and `D_v V(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Straightening {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub jacobian: Mat,
    pub det: f64,
}

fn backward_steps(t: f64, max_dt: f64) -> (usize, f64) {
    let steps = (t / max_dt).ceil().max(1.0) as usize;
    (steps, t / steps as f64)
}

/// Integrate `(x, v)` from time `t` back to 0 with the same exponential integrator used to
/// push particles, the field frozen at the midpoint time of every step.
fn trace_back(history: &VelocityHistory, t: f64, x: &[f64], v: &[f64], max_dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = x.to_vec();
    let mut vs = v.to_vec();
    if t == 0.0 {
        return Ok((xs, vs));
    }
    let (steps, dt) = backward_steps(t, max_dt);
    for k in 0..steps {
        let mid = t - (k as f64 + 0.5) * dt;
        pull_back_one(&mut xs, &mut vs, &history.at_time(mid)?, dt);
    }
    Ok((xs, vs))
}

/// Same backward steps, also carrying `d(x, v) / d v_t` through the chain rule.
fn trace_back_tangent(
    history: &VelocityHistory,
    t: f64,
    x: &[f64],
    v: &[f64],
    max_dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, Mat)> {
    let d = x.len();
    let mut xs = x.to_vec();
    let mut vs = v.to_vec();
    let mut jx = [[0.0; 3]; 3];
    let mut jv = linalg::identity(d);
    if t == 0.0 {
        return Ok((xs, vs, jv));
    }
    let (steps, dt) = backward_steps(t, max_dt);
    let grow_half = (0.5 * dt).exp_m1();
    let grow = dt.exp();
    let decay = -(-dt).exp_m1();
    for k in 0..steps {
        let time = t - (k as f64 + 0.5) * dt;
        let mut mid = [0.0; 3];
        for a in 0..d {
            mid[a] = xs[a] - grow_half * vs[a];
        }
        let sample = history.sample(time, &mid[..d])?;
        // d mid = dx - grow_half dv, d u* = G d mid
        let mut dmid = [[0.0; 3]; 3];
        for a in 0..d {
            for b in 0..d {
                dmid[a][b] = jx[a][b] - grow_half * jv[a][b];
            }
        }
        let dustar = linalg::mul(&sample.grad, &dmid, d);
        let mut jv_new = [[0.0; 3]; 3];
        let mut jx_new = [[0.0; 3]; 3];
        for a in 0..d {
            for b in 0..d {
                jv_new[a][b] = grow * jv[a][b] + (1.0 - grow) * dustar[a][b];
                jx_new[a][b] = jx[a][b] - decay * jv_new[a][b] - (dt - decay) * dustar[a][b];
            }
        }
        jx = jx_new;
        jv = jv_new;
        pull_back_one(&mut xs, &mut vs, &history.at_time(time)?, dt);
    }
    Ok((xs, vs, jv))
}

/// `V(0; t, x, v)` and `det D_v V(0; t, x, v)`.
pub fn straightening_map(
    history: &VelocityHistory,
    t: f64,
    x: &[f64],
    v: &[f64],
    opts: &StraightenOptions,
) -> Result<Straightening> {
    if history.start() > 0.0 {
        return Err(Error::HistoryRange { t: 0.0, start: history.start(), end: history.end() });
    }
    history.covers(0.0, t)?;
    if !(opts.max_dt > 0.0) {
        return Err(Error::InvalidArgument(format!("backward step must be positive, got {}", opts.max_dt)));
    }
    let d = history.dim();
    match opts.method {
        JacobianMethod::FiniteDifference { h } => {
            let (x0, v0) = trace_back(history, t, x, v, opts.max_dt)?;
            let mut jacobian = [[0.0; 3]; 3];
            for b in 0..d {
                let mut plus = v.to_vec();
                let mut minus = v.to_vec();
                plus[b] += h;
                minus[b] -= h;
                let (_, vp) = trace_back(history, t, x, &plus, opts.max_dt)?;
                let (_, vm) = trace_back(history, t, x, &minus, opts.max_dt)?;
                for a in 0..d {
                    jacobian[a][b] = (vp[a] - vm[a]) / (2.0 * h);
                }
            }
            Ok(Straightening { x0, v0, jacobian, det: linalg::det(&jacobian, d) })
        }
        JacobianMethod::Variational => {
            let (x0, v0, jacobian) = trace_back_tangent(history, t, x, v, opts.max_dt)?;
            Ok(Straightening { x0, v0, jacobian, det: linalg::det(&jacobian, d) })
        }
    }
}
