use num_complex::Complex64;

use super::FourierField;

/// Order and convention of a Sobolev norm.
///
/// The homogeneous multiplier is `(2 pi |k|)^s` with the mean mode dropped; the
/// inhomogeneous one is `(1 + (2 pi |k|)^2)^(s/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevSpec {
    pub s: f64,
    pub homogeneous: bool,
}

impl SobolevSpec {
    pub fn homogeneous(s: f64) -> Self {
        Self { s, homogeneous: true }
    }

    pub fn inhomogeneous(s: f64) -> Self {
        Self { s, homogeneous: false }
    }

    /// Squared multiplier for a mode with `(2 pi |k|)^2 = symbol`.
    fn weight_sq(&self, symbol: f64) -> f64 {
        if self.homogeneous {
            if symbol == 0.0 {
                0.0
            } else {
                symbol.powf(self.s)
            }
        } else {
            (1.0 + symbol).powf(self.s)
        }
    }
}

/// Remove the gradient part of every nonzero mode: `c_k - k (k.c_k) / |k|^2`.
pub fn leray_project(field: &FourierField) -> FourierField {
    let spec = field.spec();
    let d = spec.d();
    let mut out = field.clone();
    for i in 1..spec.len() {
        let k = spec.mode(i);
        let k2: i64 = k.iter().map(|x| x * x).sum();
        let mut dot = Complex64::new(0.0, 0.0);
        for c in 0..d {
            dot += field.component(c)[i] * k[c] as f64;
        }
        let factor = dot / k2 as f64;
        for c in 0..d {
            out.component_mut(c)[i] -= factor * k[c] as f64;
        }
    }
    out.set_div_free(true);
    out
}

/// Sobolev norm by Parseval.
pub fn sobolev_norm(field: &FourierField, spec: SobolevSpec) -> f64 {
    let grid = field.spec();
    (0..grid.len())
        .map(|i| {
            let w = spec.weight_sq(grid.laplacian_symbol(i));
            if w == 0.0 {
                return 0.0;
            }
            w * field.components().iter().map(|c| c[i].norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact heat flow `c_k -> exp(-(2 pi |k|)^2 t) c_k`.
///
/// # Panics
/// If `t` is negative or not finite.
pub fn heat_semigroup(field: &FourierField, t: f64) -> FourierField {
    assert!(t >= 0.0 && t.is_finite(), "heat semigroup needs t >= 0, got {t}");
    let spec = field.spec();
    let mut out = field.clone();
    if t == 0.0 {
        return out;
    }
    for i in 1..spec.len() {
        let factor = (-spec.laplacian_symbol(i) * t).exp();
        for c in 0..spec.d() {
            out.component_mut(c)[i] *= factor;
        }
    }
    out
}
