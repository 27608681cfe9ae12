//! Log-domain Sinkhorn iterations with epsilon scaling.

use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_ITERS_PER_STAGE: usize = 50_000;
const MARGINAL_TOL: f64 = 1e-6;
const STAGE_TOL: f64 = 1e-6;
const CHECK_EVERY: usize = 10;

fn log_sum_exp(len: usize, value: impl Fn(usize) -> f64) -> f64 {
    let max = (0..len).map(&value).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + (0..len).map(|k| (value(k) - max).exp()).sum::<f64>().ln()
}

/// Transport cost `<P, C>` of the entropic plan at regularization `eps`.
///
/// `cost` is the dense `m x n` matrix in row-major order. The marginals of the returned plan
/// match `a` and `b` to `1e-6` in L1.
pub fn sinkhorn_cost(a: &[f64], b: &[f64], cost: &[f64], eps: f64) -> Result<f64> {
    let m = a.len();
    let n = b.len();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let cost_t: Vec<f64> = (0..n * m).map(|k| cost[(k % m) * n + k / m]).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    // geometric schedule from the cost scale down to eps
    let mut stages = Vec::new();
    let mut e = max_cost.max(eps);
    while e > eps {
        stages.push(e);
        e *= 0.5;
    }
    stages.push(eps);
    for (s, &e) in stages.iter().enumerate() {
        let last = s + 1 == stages.len();
        let mut converged = false;
        let tol = if last { MARGINAL_TOL } else { STAGE_TOL };
        for iter in 0..MAX_ITERS_PER_STAGE {
            f.par_iter_mut().enumerate().for_each(|(i, fi)| {
                *fi = e * log_a[i] - e * log_sum_exp(n, |j| (g[j] - cost[i * n + j]) / e);
            });
            g.par_iter_mut().enumerate().for_each(|(j, gj)| {
                *gj = e * log_b[j] - e * log_sum_exp(m, |i| (f[i] - cost_t[j * m + i]) / e);
            });
            if iter % CHECK_EVERY != 0 {
                continue;
            }
            // after the g update the column marginals are exact; check the rows
            let err: f64 = (0..m)
                .into_par_iter()
                .map(|i| {
                    let row: f64 = (0..n).map(|j| ((f[i] + g[j] - cost[i * n + j]) / e).exp()).sum();
                    (row - a[i]).abs()
                })
                .sum();
            if err < tol {
                converged = true;
                break;
            }
        }
        if !converged && last {
            return Err(Error::NotConverged { what: "Sinkhorn", iterations: MAX_ITERS_PER_STAGE });
        }
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let c = cost[i * n + j];
            total += ((f[i] + g[j] - c) / eps).exp() * c;
        }
    }
    Ok(total)
}
