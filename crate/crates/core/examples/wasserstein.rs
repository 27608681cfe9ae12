//! Exact, entropic and dual W1 on the periodic unit square.

use std::f64::consts::PI;

use vnslab::spectral::{GridSpec, ScalarGrid};
use vnslab::transport::{dual_certificate, optimal_potential, w1_entropic, w1_exact, Histogram};

fn bump(spec: GridSpec, center: [f64; 2]) -> ScalarGrid {
    let values: Vec<f64> = (0..spec.len())
        .map(|i| {
            let x = spec.node(i);
            1.0 + 0.8 * ((2.0 * PI * (x[0] - center[0])).cos() * (2.0 * PI * (x[1] - center[1])).cos())
        })
        .collect();
    ScalarGrid { spec, values }
}

fn main() -> vnslab::Result<()> {
    let spec = GridSpec::new(2, 16)?;
    let a = Histogram::from_grid(&bump(spec, [0.25, 0.25]))?;
    let b = Histogram::from_grid(&bump(spec, [0.6, 0.8]))?;
    let exact = w1_exact(&a, &b)?;
    println!("exact W1      = {exact:.6}");
    for eps in [1e-2, 3e-3, 1e-3] {
        println!("entropic W1   = {:.6} (eps = {eps:e})", w1_entropic(&a, &b, eps)?);
    }
    let phi = optimal_potential(&a, &b)?;
    println!("dual lower bound = {:.6}", dual_certificate(&a, &b, &[phi])?);
    Ok(())
}
