//! Uniform bounds on the deposited moments under the straightening hypothesis.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::particles::init::sphere_area;

/// Adaptive Simpson quadrature on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `I_q = int_{R^d} (1 + |v|) / (1 + |v|^q) dv`, finite for `q > d + 1`.
///
/// The integral is reduced to the radius and split at `r = 1`; the outer part is mapped to
/// `(0, 1]` by `r = 1/s` and the power singularity at `s = 0` removed by `s = w^{1/(b+1)}`.
pub fn moment_integral(q: f64, d: usize) -> Result<f64> {
    if !(q > d as f64 + 1.0) || !(2..=3).contains(&d) {
        return Err(Error::DivergentIntegral { q, d });
    }
    let tol = 1e-13;
    let dim = d as f64;
    let inner = adaptive_simpson(&|r: f64| r.powf(dim - 1.0) * (1.0 + r) / (1.0 + r.powf(q)), 0.0, 1.0, tol);
    // int_0^1 s^b (1 + s) / (1 + s^q) ds with b = q - d - 2 > -1
    let b = q - dim - 2.0;
    let outer = adaptive_simpson(
        &|w: f64| {
            let s = w.powf(1.0 / (b + 1.0));
            (1.0 + s) / (1.0 + s.powf(q)) / (b + 1.0)
        },
        0.0,
        1.0,
        tol,
    );
    Ok(sphere_area(d) * (inner + outer))
}

/// One sampled time of the moment-bound comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentBoundRow {
    pub t: f64,
    pub rho_sup: f64,
    pub rho_bound: f64,
    pub j_sup: f64,
    pub j_bound: f64,
    /// Whether `int_0^t ||grad u||_inf <= delta`, the hypothesis of both bounds.
    pub hypothesis_ok: bool,
}

impl MomentBoundRow {
    pub fn rho_margin(&self) -> f64 {
        self.rho_bound - self.rho_sup
    }

    pub fn j_margin(&self) -> f64 {
        self.j_bound - self.j_sup
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentBoundReport {
    pub i_q: f64,
    pub n_q: f64,
    pub rows: Vec<MomentBoundRow>,
}

impl MomentBoundReport {
    /// Smallest density margin over the samples where the hypothesis holds.
    pub fn min_rho_margin(&self) -> f64 {
        self.rows.iter().filter(|r| r.hypothesis_ok).map(MomentBoundRow::rho_margin).fold(f64::INFINITY, f64::min)
    }

    pub fn min_j_margin(&self) -> f64 {
        self.rows.iter().filter(|r| r.hypothesis_ok).map(MomentBoundRow::j_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Compare the deposited `sup rho` and `sup |j|` of a run with `2 I_q N_q` and
/// `2 I_q e^{-t} (int_0^t e^s ||u||_inf + 1) N_q`.
pub fn moment_bound_check(
    records: &[DiagnosticsRecord],
    n_q: f64,
    q: f64,
    d: usize,
    delta: f64,
) -> Result<MomentBoundReport> {
    let i_q = moment_integral(q, d)?;
    let rows = records
        .iter()
        .map(|r| MomentBoundRow {
            t: r.t,
            rho_sup: r.rho_sup,
            rho_bound: 2.0 * i_q * n_q,
            j_sup: r.j_sup,
            j_bound: 2.0 * i_q * (-r.t).exp() * (r.exp_u_sup_int + 1.0) * n_q,
            hypothesis_ok: r.gradint0 <= delta,
        })
        .collect();
    Ok(MomentBoundReport { i_q, n_q, rows })
}
