//! The coupled time loop: drag force, fluid-first splitting, accumulated integrals and the
//! strong-existence and bootstrap monitors.

mod monitor;

use crate::diagnostics::{
    dissipation_with, fluid_distance_to_constant, identity_eqmoy, kinetic_energy, lambda_lower_bound, modulated_energy,
    w1_monokinetic_upper, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::particles::{
    cic::deposit_with, deposit, moment, push, CicSampler, Moments, ParticleEnsemble, VelocitySampler,
};
use crate::spectral::{
    cfl_time_step, grad_sup_norm, ns_step, sobolev_norm, FourierField, ScalarGrid, Scheme, SobolevSpec, VectorGrid,
};

pub use monitor::{bootstrap_monitor, straightening_threshold, strong_existence_criterion, MonitorConfig};

/// Pointwise Brinkman force `j - rho u`, transformed and dealiased (not projected).
pub fn brinkman_force(rho: &ScalarGrid, j: &VectorGrid, u: &FourierField) -> FourierField {
    let phys = u.to_physical();
    let mut force = j.clone();
    for (fc, uc) in force.comps.iter_mut().zip(&phys.comps) {
        for ((f, r), uv) in fc.iter_mut().zip(&rho.values).zip(uc) {
            *f -= r * uv;
        }
    }
    let mut out = FourierField::from_physical(&force).dealiased();
    out.set_div_free(false);
    out
}

/// Drag force deposited from the particles: `sum w_i (v_i - u(x_i)) S(x - x_i)`.
///
/// It equals `j - (rho u)` with the product taken particle by particle, which makes the
/// exchanged momentum and energy match the particle side exactly.
pub fn drag_force(particles: &ParticleEnsemble, u: &FourierField, u_at_particles: &[f64]) -> FourierField {
    let spec = u.spec();
    let d = spec.d();
    let comps = deposit_with(particles, &spec, d, |i| {
        let v = particles.velocity(i);
        let mut out = [0.0; 4];
        for a in 0..d {
            out[a] = v[a] - u_at_particles[i * d + a];
        }
        out
    });
    let mut out = FourierField::from_physical(&VectorGrid { spec, comps }).dealiased();
    out.set_div_free(false);
    out
}

/// Instantaneous scalars needed by the accumulators.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues {
    pub grad_sup: f64,
    pub force_norm_sq: f64,
    pub dissipation: f64,
    pub u_sup: f64,
    pub rho_sup: f64,
    pub j_sup: f64,
}

/// Everything derived from a state at one instant.
#[derive(Clone, Debug)]
pub struct Observation {
    pub moments: Moments,
    pub u_at_particles: Vec<f64>,
    pub force: FourierField,
    pub point: PointValues,
}

pub fn observe(u: &FourierField, particles: &ParticleEnsemble) -> Observation {
    let spec = u.spec();
    let sampler = CicSampler::from_field(u);
    let d = spec.d();
    let u_at_particles: Vec<f64> =
        (0..particles.len()).flat_map(|i| sampler.sample(particles.position(i)).into_iter().take(d)).collect();
    let moments = deposit(particles, &spec);
    let force = drag_force(particles, u, &u_at_particles);
    let point = PointValues {
        grad_sup: grad_sup_norm(u),
        force_norm_sq: sobolev_norm(&force, SobolevSpec::inhomogeneous(-0.5)).powi(2),
        dissipation: dissipation_with(u, particles, &u_at_particles),
        u_sup: sampler.grid.sup_norm(),
        rho_sup: moments.rho.sup(),
        j_sup: moments.j.sup_norm(),
    };
    Observation { moments, u_at_particles, force, point }
}

/// Time integrals accumulated by the trapezoid rule, plus running maxima.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Accumulators {
    /// `int_0^t ||grad u||_inf`.
    pub grad_int_0: f64,
    /// `int_1^t ||grad u||_inf`.
    pub grad_int_1: f64,
    /// `int_0^t ||F||^2_{H^-1/2}`.
    pub force_int: f64,
    /// `int_0^t D`.
    pub dissipation_int: f64,
    /// `int_0^t e^s ||u||_inf`.
    pub exp_u_sup_int: f64,
    pub rho_sup_max: f64,
    pub j_sup_max: f64,
    /// Values at the current time, the left endpoint of the next trapezoid.
    pub last: PointValues,
}

impl Accumulators {
    fn start(point: PointValues) -> Self {
        Self { rho_sup_max: point.rho_sup, j_sup_max: point.j_sup, last: point, ..Self::default() }
    }

    fn advance(&mut self, t0: f64, t1: f64, next: PointValues) {
        let h = t1 - t0;
        let prev = self.last;
        let trap = |a: f64, b: f64| 0.5 * h * (a + b);
        self.grad_int_0 += trap(prev.grad_sup, next.grad_sup);
        if t0 >= 1.0 {
            self.grad_int_1 += trap(prev.grad_sup, next.grad_sup);
        } else if t1 > 1.0 {
            let g1 = prev.grad_sup + (next.grad_sup - prev.grad_sup) * (1.0 - t0) / h;
            self.grad_int_1 += 0.5 * (t1 - 1.0) * (g1 + next.grad_sup);
        }
        self.force_int += trap(prev.force_norm_sq, next.force_norm_sq);
        self.dissipation_int += trap(prev.dissipation, next.dissipation);
        self.exp_u_sup_int += 0.5 * h * (t0.exp() * prev.u_sup + t1.exp() * next.u_sup);
        self.rho_sup_max = self.rho_sup_max.max(next.rho_sup);
        self.j_sup_max = self.j_sup_max.max(next.j_sup);
        self.last = next;
    }
}

/// Complete state of a coupled run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub step: u64,
    pub t: f64,
    pub u: FourierField,
    pub particles: ParticleEnsemble,
    pub acc: Accumulators,
    pub strong_existence_ok: bool,
    pub bootstrap_ok: bool,
    /// Inhomogeneous `H^{1/2}` norm of the initial velocity.
    pub u0_h_half: f64,
    /// `<u0 + j0>`, conserved by the exact dynamics.
    pub conserved_momentum: Vec<f64>,
    pub initial_energy: f64,
}

impl SimState {
    pub fn new(u: FourierField, particles: ParticleEnsemble) -> Result<Self> {
        if !u.is_div_free() {
            return Err(Error::InvalidArgument("initial velocity must be divergence-free".into()));
        }
        if particles.dim() != u.dim() && !particles.is_empty() {
            return Err(Error::InvalidArgument("particles and fluid have different dimensions".into()));
        }
        let obs = observe(&u, &particles);
        let mean_j = particles.momentum();
        let conserved_momentum = u.mean().iter().zip(&mean_j).map(|(a, b)| a + b).collect();
        let initial_energy = kinetic_energy(&u, &particles);
        Ok(Self {
            step: 0,
            t: 0.0,
            u0_h_half: sobolev_norm(&u, SobolevSpec::inhomogeneous(0.5)),
            u,
            particles,
            acc: Accumulators::start(obs.point),
            strong_existence_ok: true,
            bootstrap_ok: true,
            conserved_momentum,
            initial_energy,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    /// `U = <u0 + j0> / 2`, the expected common limit velocity.
    pub fn limit_velocity(&self) -> Vec<f64> {
        self.conserved_momentum.iter().map(|c| 0.5 * c).collect()
    }

    /// Largest admissible step: advective CFL bound and the explicit drag bound `1 / rho_sup`.
    pub fn dt_max(&self) -> f64 {
        let drag = if self.acc.last.rho_sup > 0.0 { 1.0 / self.acc.last.rho_sup } else { f64::INFINITY };
        cfl_time_step(&self.u).min(drag)
    }

    fn update_flags(&mut self, monitor: &MonitorConfig) {
        let (_, strong) = strong_existence_criterion(self, self.u0_h_half, monitor);
        let (_, boot) = bootstrap_monitor(self, monitor);
        self.strong_existence_ok &= strong;
        self.bootstrap_ok &= boot;
    }

    /// Diagnostics of the current state.
    pub fn record(&self, monitor: &MonitorConfig, alpha: f64) -> Result<DiagnosticsRecord> {
        let obs = observe(&self.u, &self.particles);
        self.record_with(&obs, monitor, alpha)
    }

    pub fn record_with(&self, obs: &Observation, monitor: &MonitorConfig, alpha: f64) -> Result<DiagnosticsRecord> {
        let u = &self.u;
        let particles = &self.particles;
        let mean_u = u.mean();
        let mean_j = particles.momentum();
        let energy = kinetic_energy(u, particles);
        let emod = modulated_energy(u, particles);
        let conserved_sq: f64 = self.conserved_momentum.iter().map(|c| c * c).sum();
        let drift: f64 = mean_u
            .iter()
            .zip(&mean_j)
            .zip(&self.conserved_momentum)
            .map(|((a, b), c)| (a + b - c).powi(2))
            .sum::<f64>()
            .sqrt();
        let target = self.limit_velocity();
        let w1_kinetic = w1_monokinetic_upper(particles, &target);
        let (criterion_value, _) = strong_existence_criterion(self, self.u0_h_half, monitor);
        let (gradint, _) = bootstrap_monitor(self, monitor);
        Ok(DiagnosticsRecord {
            t: self.t,
            energy,
            dissipation: obs.point.dissipation,
            modulated_energy: emod,
            mass: particles.mass(),
            m_alpha: moment(particles, alpha),
            rho_sup: obs.point.rho_sup,
            j_sup: obs.point.j_sup,
            u_sup: obs.point.u_sup,
            grad_sup: obs.point.grad_sup,
            gradint,
            gradint0: self.acc.grad_int_0,
            force_int: self.acc.force_int,
            dissipation_int: self.acc.dissipation_int,
            exp_u_sup_int: self.acc.exp_u_sup_int,
            criterion_value,
            lambda_theory: lambda_lower_bound(self.acc.rho_sup_max, monitor.c_p)?,
            w1_kinetic,
            w1_upper: w1_kinetic + fluid_distance_to_constant(u, &target),
            momentum_drift: drift,
            energy_residual: energy + self.acc.dissipation_int - self.initial_energy,
            emod_offset: emod - energy + 0.25 * conserved_sq,
            eqmoy_residual: identity_eqmoy(&mean_j, &mean_u, &self.conserved_momentum),
            strong_existence_ok: self.strong_existence_ok,
            bootstrap_ok: self.bootstrap_ok,
            mean_u,
            mean_j,
        })
    }
}

/// One fluid-first Lie step of the coupled system.
///
/// The drag force of the current state drives one Navier-Stokes step, then particles are
/// pushed through the time-averaged field `(u + u') / 2`.
pub fn step(state: &mut SimState, dt: f64, scheme: Scheme, monitor: &MonitorConfig) -> Result<Observation> {
    let dt_max = state.dt_max();
    if dt > dt_max {
        return Err(Error::TimeStepTooLarge { dt, dt_max });
    }
    let obs = observe(&state.u, &state.particles);
    let u_next = ns_step(&state.u, &obs.force, dt, scheme)?;
    if !state.particles.is_empty() {
        let averaged = state.u.axpy(1.0, &u_next).scaled(0.5);
        push(&mut state.particles, &CicSampler::from_field(&averaged), dt)?;
    }
    state.u = u_next;
    let t0 = state.t;
    state.step += 1;
    state.t = t0 + dt;
    let next = observe(&state.u, &state.particles);
    state.acc.advance(t0, state.t, next.point);
    state.update_flags(monitor);
    Ok(next)
}

/// Schedule of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub monitor: MonitorConfig,
    /// Velocity moment order recorded in the series.
    pub alpha: f64,
}

impl RunPlan {
    /// Number of steps from time 0 to `t_final`.
    pub fn total_steps(&self) -> u64 {
        (self.t_final / self.dt).round() as u64
    }
}

/// Advance to `t_final`, recording every `monitor.report_stride` steps and at the end.
///
/// `on_step` sees the state after every step together with the records so far
/// (checkpointing, snapshots).
pub fn run(
    state: &mut SimState,
    plan: &RunPlan,
    mut on_step: impl FnMut(&SimState, &[DiagnosticsRecord]) -> Result<()>,
) -> Result<Vec<DiagnosticsRecord>> {
    let stride = plan.monitor.report_stride.max(1) as u64;
    let total = plan.total_steps();
    let mut records = Vec::new();
    if state.step == 0 {
        records.push(state.record(&plan.monitor, plan.alpha)?);
    }
    while state.step < total {
        let obs = step(state, plan.dt, plan.scheme, &plan.monitor)?;
        if state.step.is_multiple_of(stride) || state.step == total {
            records.push(state.record_with(&obs, &plan.monitor, plan.alpha)?);
        }
        on_step(state, &records)?;
    }
    Ok(records)
}
