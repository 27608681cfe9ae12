//! Particles in a still fluid: friction contracts every velocity moment as `e^{-alpha t}`.

use vnslab::particles::{moment, push, InitialDataSpec, UniformVelocity, VelocityProfile};
use vnslab::spectral::GridSpec;

fn main() -> vnslab::Result<()> {
    let spec = InitialDataSpec {
        velocity: VelocityProfile::PolyTail { q: 6.0 },
        nv: 12,
        v_max: Some(8.0),
        ..InitialDataSpec::default()
    };
    let mut particles = spec.build_particles(&GridSpec::new(2, 8)?)?;
    println!(
        "{} particles, velocity box half-width {}, truncated tail mass {:.2e}",
        particles.len(),
        particles.meta.v_max,
        particles.meta.tail_mass
    );
    let still = UniformVelocity::new(&[0.0, 0.0]);
    let m0 = moment(&particles, 3.5);
    let dt = 0.05;
    for step in 1..=40 {
        push(&mut particles, &still, dt)?;
        if step % 10 == 0 {
            let t = step as f64 * dt;
            println!(
                "t = {t:.2}  M_3.5 = {:.6e}  e^(-3.5 t) M_3.5(0) = {:.6e}",
                moment(&particles, 3.5),
                (-3.5 * t).exp() * m0
            );
        }
    }
    Ok(())
}
