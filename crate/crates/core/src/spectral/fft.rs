//! Multi-dimensional complex FFTs on the `n^d` grid, built from 1-D rustfft plans.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn transform(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let len = n.pow(d as u32);
    debug_assert_eq!(data.len(), len);
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = stride * n;
        for outer in 0..len / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}

/// Physical samples to Fourier coefficients, normalized so that
/// `u(x) = sum_k c_k exp(2 i pi k.x)`.
pub fn forward(data: &mut [Complex64], n: usize, d: usize) {
    transform(data, n, d, false);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
}

/// Fourier coefficients to physical samples on the `n^d` grid.
pub fn inverse(data: &mut [Complex64], n: usize, d: usize) {
    transform(data, n, d, true);
}
