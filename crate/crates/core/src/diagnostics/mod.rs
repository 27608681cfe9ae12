//! Scalar functionals of a state: energies, dissipation, modulated energy, and the
//! identities and bounds relating them.

mod record;

use crate::error::{Error, Result};
use crate::particles::{compensated_sum, interpolate, moment, ParticleEnsemble};
use crate::spectral::FourierField;

pub use record::DiagnosticsRecord;

/// `E = ||u||^2 / 2 + sum w |v|^2 / 2`.
pub fn kinetic_energy(u: &FourierField, particles: &ParticleEnsemble) -> f64 {
    0.5 * u.l2_norm_sq() + 0.5 * moment(particles, 2.0)
}

/// `D = sum w |u(x_i) - v_i|^2 + ||grad u||^2` with `u(x_i)` from cloud-in-cell interpolation.
pub fn dissipation(u: &FourierField, particles: &ParticleEnsemble) -> f64 {
    let at = interpolate(u, particles);
    dissipation_with(u, particles, &at)
}

/// [`dissipation`] with precomputed particle velocities of the fluid (stride `d`).
pub fn dissipation_with(u: &FourierField, particles: &ParticleEnsemble, u_at_particles: &[f64]) -> f64 {
    let d = particles.dim();
    let drag = compensated_sum((0..particles.len()).map(|i| {
        let v = particles.velocity(i);
        let slip: f64 = (0..d).map(|a| (u_at_particles[i * d + a] - v[a]).powi(2)).sum();
        particles.weight(i) * slip
    }));
    drag + u.grad_l2_norm_sq()
}

/// Modulated energy `sum w |v - <j>|^2 / 2 + ||u - <u>||^2 / 2 + |<j> - <u>|^2 / 4`.
pub fn modulated_energy(u: &FourierField, particles: &ParticleEnsemble) -> f64 {
    let d = u.dim();
    let mean_j = particles.momentum();
    let mean_u = u.mean();
    let kinetic = compensated_sum((0..particles.len()).map(|i| {
        let v = particles.velocity(i);
        let r2: f64 = (0..d).map(|a| (v[a] - mean_j[a]).powi(2)).sum();
        particles.weight(i) * r2
    }));
    let fluctuation = u.fluctuation_norm_sq();
    let gap: f64 = mean_j.iter().zip(&mean_u).map(|(j, m)| (j - m).powi(2)).sum();
    0.5 * kinetic + 0.5 * fluctuation + 0.25 * gap
}

/// Residual of `|<j> - <u>|^2 / 4 = |<j> - c / 2|^2` where `c` is the conserved `<u0 + j0>`.
pub fn identity_eqmoy(mean_j: &[f64], mean_u: &[f64], conserved: &[f64]) -> f64 {
    let lhs: f64 = mean_j.iter().zip(mean_u).map(|(j, u)| (j - u).powi(2)).sum::<f64>() / 4.0;
    let rhs: f64 = mean_j.iter().zip(conserved).map(|(j, c)| (j - 0.5 * c).powi(2)).sum();
    lhs - rhs
}

/// Decay rate guaranteed by a density bound `M`: `alpha = (c_P / (2M) + 1)^-1`,
/// `lambda = min(1 - alpha, c_P / 2)`.
pub fn lambda_lower_bound(rho_sup: f64, c_p: f64) -> Result<f64> {
    if !(rho_sup >= 0.0) {
        return Err(Error::InvalidArgument(format!("density bound must be nonnegative, got {rho_sup}")));
    }
    if !(c_p > 0.0) {
        return Err(Error::InvalidArgument(format!("Poincare constant must be positive, got {c_p}")));
    }
    let alpha = if rho_sup == 0.0 { 0.0 } else { 1.0 / (c_p / (2.0 * rho_sup) + 1.0) };
    Ok((1.0 - alpha).min(0.5 * c_p))
}

/// Least-squares fit of `log E(t) = a - rate t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept - self.rate * t).exp()
    }
}

pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument("decay fit needs at least two samples".into()));
    }
    if let Some(&(t, e)) = series.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::InvalidArgument(format!("nonpositive value {e} at t = {t} in the fit window")));
    }
    let n = series.len() as f64;
    let mt = series.iter().map(|p| p.0).sum::<f64>() / n;
    let my = series.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = series.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = series.iter().map(|p| (p.0 - mt) * (p.1.ln() - my)).sum();
    let syy: f64 = series.iter().map(|p| (p.1.ln() - my).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InvalidArgument("decay fit needs distinct times".into()));
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sty * sty) / (stt * syy) };
    Ok(DecayFit { rate: -slope, intercept, r_squared })
}

/// Cost `sum w |v_i - U|` of moving every particle's velocity to `U`; an upper bound on
/// the phase-space W1 distance between `f` and `rho_f (x) delta_U`.
pub fn w1_monokinetic_upper(particles: &ParticleEnsemble, target: &[f64]) -> f64 {
    let d = particles.dim();
    compensated_sum((0..particles.len()).map(|i| {
        let v = particles.velocity(i);
        let r2: f64 = (0..d).map(|a| (v[a] - target[a]).powi(2)).sum();
        particles.weight(i) * r2.sqrt()
    }))
}

/// `||u - U||_{L^2}` for a constant vector `U`.
pub fn fluid_distance_to_constant(u: &FourierField, target: &[f64]) -> f64 {
    let mean = u.mean();
    let shift: f64 = mean.iter().zip(target).map(|(m, c)| (m - c).powi(2)).sum();
    (u.fluctuation_norm_sq() + shift).sqrt()
}
