//! Weighted particle discretization of the distribution function `f(t, x, v)`.
//!
//! Positions live on the unit torus and are always reduced mod 1. Weights are fixed at
//! construction and never change, so mass is conserved bit for bit.

pub(crate) mod cic;
pub(crate) mod init;
mod io;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use cic::{deposit, interpolate, CicSampler, Moments};
pub use init::{estimate_nq, sample_fluid, FluidInit, InitialDataSpec, SpatialProfile, VelocityProfile};
pub use io::{read_ensemble, write_ensemble, write_subsample_csv, ENSEMBLE_FORMAT_VERSION};

/// Provenance carried alongside an ensemble (written into checkpoints).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleMeta {
    pub q: f64,
    pub v_max: f64,
    pub seed: u64,
    /// Mass of `f0` discarded by truncating the velocity box.
    pub tail_mass: f64,
}

/// Particles `(x_i, v_i, w_i)` stored as flat arrays with stride `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    d: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    pub meta: EnsembleMeta,
}

/// Reduce a coordinate into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x.floor() can round r up to exactly 1 for tiny negative x
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl ParticleEnsemble {
    pub fn new(d: usize, x: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("particle dimension {d} not in 1..=3")));
        }
        if x.len() != w.len() * d || v.len() != w.len() * d {
            return Err(Error::InvalidArgument("position, velocity and weight arrays disagree in length".into()));
        }
        if let Some(i) = w.iter().position(|&wi| !(wi >= 0.0 && wi.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight {i} is negative or not finite")));
        }
        let x = x.into_iter().map(wrap_unit).collect();
        Ok(Self { d, x, v, w, meta: EnsembleMeta::default() })
    }

    pub fn empty(d: usize) -> Self {
        Self { d, x: Vec::new(), v: Vec::new(), w: Vec::new(), meta: EnsembleMeta::default() }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.d..(i + 1) * self.d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn velocities(&self) -> &[f64] {
        &self.v
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Total mass `sum w_i`.
    pub fn mass(&self) -> f64 {
        moment(self, 0.0)
    }

    /// Mean momentum `<j_f> = sum w_i v_i`.
    pub fn momentum(&self) -> Vec<f64> {
        (0..self.d).map(|a| compensated_sum((0..self.len()).map(|i| self.w[i] * self.v[i * self.d + a]))).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|z| z.is_finite())
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Velocity moment `M_alpha = sum w_i |v_i|^alpha`.
pub fn moment(particles: &ParticleEnsemble, alpha: f64) -> f64 {
    assert!(alpha >= 0.0, "moment order must be nonnegative");
    let d = particles.d;
    compensated_sum((0..particles.len()).map(|i| {
        if alpha == 0.0 {
            return particles.w[i];
        }
        let speed2: f64 = particles.v[i * d..(i + 1) * d].iter().map(|c| c * c).sum();
        particles.w[i] * speed2.powf(0.5 * alpha)
    }))
}

/// Source of the fluid velocity seen by particles.
pub trait VelocitySampler: Sync {
    fn dim(&self) -> usize;
    /// Velocity at the torus point `x`; only the first `dim()` entries are meaningful.
    fn sample(&self, x: &[f64]) -> [f64; 3];
}

/// Spatially constant velocity.
#[derive(Clone, Copy, Debug)]
pub struct UniformVelocity {
    pub d: usize,
    pub value: [f64; 3],
}

impl UniformVelocity {
    pub fn new(value: &[f64]) -> Self {
        let mut v = [0.0; 3];
        v[..value.len()].copy_from_slice(value);
        Self { d: value.len(), value: v }
    }
}

impl VelocitySampler for UniformVelocity {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, _x: &[f64]) -> [f64; 3] {
        self.value
    }
}

/// Velocity given by an arbitrary closure.
pub struct FnVelocity<F> {
    pub d: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> [f64; 3] + Sync> VelocitySampler for FnVelocity<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, x: &[f64]) -> [f64; 3] {
        (self.f)(x)
    }
}

/// Advance `(x, v)` by `dt` along `x' = v, v' = u(x) - v` with `u` frozen at the midpoint.
///
/// The midpoint is the free-streaming position at `dt/2`. With `u* = u(x_mid)` the update
/// is the exact solution of the frozen-field ODE.
pub fn push_one(x: &mut [f64], v: &mut [f64], field: &impl VelocitySampler, dt: f64) {
    let d = x.len();
    let decay_half = -(-0.5 * dt).exp_m1();
    let decay = -(-dt).exp_m1();
    let mut mid = [0.0; 3];
    for a in 0..d {
        mid[a] = wrap_unit(x[a] + decay_half * v[a]);
    }
    let ustar = field.sample(&mid[..d]);
    for a in 0..d {
        let v_old = v[a];
        v[a] = ustar[a] + (1.0 - decay) * (v_old - ustar[a]);
        x[a] = wrap_unit(x[a] + decay * v_old + (dt - decay) * ustar[a]);
    }
}

/// Inverse of [`push_one`] for a time-independent field, up to the midpoint estimate.
///
/// The midpoint is recovered exactly when `u` is constant, so the composition with
/// `push_one` is the identity in that case.
pub fn pull_back_one(x: &mut [f64], v: &mut [f64], field: &impl VelocitySampler, dt: f64) {
    let d = x.len();
    let grow_half = (0.5 * dt).exp_m1();
    let decay = -(-dt).exp_m1();
    let mut mid = [0.0; 3];
    for a in 0..d {
        mid[a] = wrap_unit(x[a] - grow_half * v[a]);
    }
    let ustar = field.sample(&mid[..d]);
    for a in 0..d {
        let v_old = ustar[a] + dt.exp() * (v[a] - ustar[a]);
        x[a] = wrap_unit(x[a] - decay * v_old - (dt - decay) * ustar[a]);
        v[a] = v_old;
    }
}

/// Push every particle by `dt` (parallel, order independent).
pub fn push(particles: &mut ParticleEnsemble, field: &impl VelocitySampler, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let d = particles.d;
    particles.x.par_chunks_mut(d).zip(particles.v.par_chunks_mut(d)).for_each(|(x, v)| push_one(x, v, field, dt));
    if particles.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("particle state"))
    }
}

/// Integrate backward in time by `dt` (used for characteristics feet).
pub fn pull_back(particles: &mut ParticleEnsemble, field: &impl VelocitySampler, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let d = particles.d;
    particles.x.par_chunks_mut(d).zip(particles.v.par_chunks_mut(d)).for_each(|(x, v)| pull_back_one(x, v, field, dt));
    if particles.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("particle state"))
    }
}
