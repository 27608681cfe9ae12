use num_complex::Complex64;

use super::{fft, heat_semigroup, leray_project, FourierField};
use crate::error::{Error, Result};

/// Time discretization of the Navier-Stokes step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    /// `u' = H(dt) (u + dt P(F - N(u)))`, first order.
    #[default]
    Lie,
    /// Half heat step, explicit midpoint for advection and force, half heat step.
    Strang,
}

/// Projected, dealiased advection `P(omega x u)` in rotational form.
///
/// The gradient part `grad |u|^2 / 2` is absorbed by the pressure. The result is
/// L^2-orthogonal to the dealiased `u` up to rounding.
pub fn nonlinear_term(u: &FourierField) -> FourierField {
    let spec = u.spec();
    let (n, d) = (spec.n(), spec.d());
    let u = u.clone().dealiased();
    let grad = u.gradient_coeffs();
    let to_grid = |coeffs: &[Complex64]| {
        let mut data = coeffs.to_vec();
        fft::inverse(&mut data, n, d);
        data
    };
    let vel: Vec<Vec<Complex64>> = (0..d).map(|c| to_grid(u.component(c))).collect();
    let curl_coeffs: Vec<Vec<Complex64>> = if d == 2 {
        vec![grad[1][0].iter().zip(&grad[0][1]).map(|(a, b)| a - b).collect()]
    } else {
        (0..3)
            .map(|c| {
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                grad[b][a].iter().zip(&grad[a][b]).map(|(p, q)| p - q).collect()
            })
            .collect()
    };
    let curl: Vec<Vec<Complex64>> = curl_coeffs.iter().map(|c| to_grid(c)).collect();
    let mut prod = vec![vec![Complex64::new(0.0, 0.0); spec.len()]; d];
    for i in 0..spec.len() {
        if d == 2 {
            let w = curl[0][i].re;
            prod[0][i] = Complex64::new(-w * vel[1][i].re, 0.0);
            prod[1][i] = Complex64::new(w * vel[0][i].re, 0.0);
        } else {
            let w = [curl[0][i].re, curl[1][i].re, curl[2][i].re];
            let v = [vel[0][i].re, vel[1][i].re, vel[2][i].re];
            prod[0][i] = Complex64::new(w[1] * v[2] - w[2] * v[1], 0.0);
            prod[1][i] = Complex64::new(w[2] * v[0] - w[0] * v[2], 0.0);
            prod[2][i] = Complex64::new(w[0] * v[1] - w[1] * v[0], 0.0);
        }
    }
    for c in prod.iter_mut() {
        fft::forward(c, n, d);
        // the mean of omega x u vanishes for divergence-free band-limited u
        c[0] = Complex64::new(0.0, 0.0);
    }
    let field = FourierField::from_coeffs(spec, prod, false).expect("shape matches spec");
    leray_project(&field.dealiased())
}

fn check_finite(field: FourierField) -> Result<FourierField> {
    if field.is_finite() {
        Ok(field)
    } else {
        Err(Error::NonFinite("fluid coefficients"))
    }
}

/// One IMEX step of `du/dt + P(u.grad u) = Laplacian u + P F`.
///
/// Diffusion is integrated exactly; advection and force are explicit at time level n.
pub fn ns_step(u: &FourierField, force: &FourierField, dt: f64, scheme: Scheme) -> Result<FourierField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if u.spec() != force.spec() {
        return Err(Error::InvalidArgument("velocity and force live on different grids".into()));
    }
    let pf = leray_project(&force.clone().dealiased());
    let rhs = |v: &FourierField| pf.axpy(-1.0, &nonlinear_term(v));
    let next = match scheme {
        Scheme::Lie => heat_semigroup(&u.axpy(dt, &rhs(u)), dt),
        Scheme::Strang => {
            let half = heat_semigroup(u, 0.5 * dt);
            let mid = half.axpy(0.5 * dt, &rhs(&half));
            let advanced = half.axpy(dt, &rhs(&mid));
            heat_semigroup(&advanced, 0.5 * dt)
        }
    };
    let mut next = leray_project(&next);
    next.set_div_free(true);
    check_finite(next)
}

/// `||grad u||_{L^inf}` sampled on a 2x refined grid (pointwise Frobenius norm).
pub fn grad_sup_norm(u: &FourierField) -> f64 {
    let fine = u.padded(2 * u.spec().n()).expect("doubling keeps the grid valid");
    let grad = fine.gradient_physical();
    let len = fine.spec().len();
    (0..len).map(|i| grad.iter().flatten().map(|g| g[i] * g[i]).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Advective time-step bound `0.5 / (K max|u|)`; infinite for a vanishing field.
pub fn cfl_time_step(u: &FourierField) -> f64 {
    let umax = u.to_physical().sup_norm();
    let cutoff = u.spec().cutoff() as f64;
    if umax == 0.0 {
        f64::INFINITY
    } else {
        0.5 / (cutoff * umax)
    }
}
