//! Taylor-Green vortex under the pseudo-spectral Navier-Stokes solver.
//!
//! The vortex is a steady Euler flow, so its energy decays at the heat rate `2 (2 pi)^2 |k|^2`.

use std::f64::consts::PI;

use vnslab::particles::{sample_fluid, FluidInit};
use vnslab::spectral::{grad_sup_norm, ns_step, FourierField, GridSpec, Scheme};

fn main() -> vnslab::Result<()> {
    let spec = GridSpec::new(2, 32)?;
    let mut u = sample_fluid(&FluidInit::TaylorGreen { amplitude: 1.0 }, &spec, 0)?;
    let zero = FourierField::zeros(spec);
    let e0 = 0.5 * u.l2_norm_sq();
    let dt = 1e-3;
    println!("{:>6} {:>14} {:>14} {:>12}", "t", "energy", "heat rate", "|grad u|_inf");
    for step in 1..=100 {
        u = ns_step(&u, &zero, dt, Scheme::Strang)?;
        if step % 20 == 0 {
            let t = step as f64 * dt;
            let exact = e0 * (-2.0 * (2.0 * PI).powi(2) * 2.0 * t).exp();
            println!("{t:>6.3} {:>14.6e} {exact:>14.6e} {:>12.5}", 0.5 * u.l2_norm_sq(), grad_sup_norm(&u));
        }
    }
    Ok(())
}
