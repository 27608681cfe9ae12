//! A small coupled run: energies, momentum drift and monitors over time.

use vnslab::cli_io::parse_config;
use vnslab::coupling::run;

fn main() -> vnslab::Result<()> {
    let cfg = parse_config(
        "grid.n = 16\nparticles.nv = 6\ninit.velocity.mean = 0.3,0\ninit.fluid.h_half = 0.1\ntime.t_final = 3\nio.stride = 25\n",
    )?;
    let mut state = cfg.initial_state()?;
    println!("{} particles, dt_max = {:.4}", state.particles.len(), state.dt_max());
    let records = run(&mut state, &cfg.run_plan(), |_, _| Ok(()))?;
    println!("{:>5} {:>12} {:>12} {:>11} {:>11} {:>6} {:>6}", "t", "E", "Emod", "drift", "gradint", "strong", "boot");
    for r in &records {
        println!(
            "{:>5.2} {:>12.5e} {:>12.5e} {:>11.3e} {:>11.3e} {:>6} {:>6}",
            r.t, r.energy, r.modulated_energy, r.momentum_drift, r.gradint, r.strong_existence_ok, r.bootstrap_ok
        );
    }
    Ok(())
}
