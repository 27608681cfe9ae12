//! Fourier pseudo-spectral representation of periodic vector fields on the unit torus.
//!
//! Modes are `exp(2 i pi k.x)` on `[0,1)^d`, so the symbol of `-Laplacian` is `(2 pi |k|)^2`.
//! Coefficients are stored in FFT order (index `i` maps to wavenumber `i` for `i < n/2`
//! and to `i - n` otherwise), one array per vector component, row-major with axis 0 slowest.

pub mod fft;
mod field_io;
mod ns;
mod ops;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use field_io::{read_field, write_field, write_field_csv, FIELD_FORMAT_VERSION};
pub use ns::{cfl_time_step, grad_sup_norm, nonlinear_term, ns_step, Scheme};
pub use ops::{heat_semigroup, leray_project, sobolev_norm, SobolevSpec};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Spatial resolution of the unit torus `[0,1)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    d: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{2, 3}}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 8")));
        }
        Ok(Self { d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid nodes (and of Fourier modes), `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Largest retained wavenumber per axis under the 2/3 rule.
    ///
    /// Quadratic products of modes with `|k_i| <= K` alias onto retained modes unless
    /// `3K < n`, so the cutoff is `floor((n - 1) / 3)`; this equals `floor(n / 3)` unless
    /// `3 | n`.
    pub fn cutoff(&self) -> usize {
        (self.n - 1) / 3
    }

    /// Signed wavenumber of FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Per-axis FFT indices of the flat index `idx` (unused axes are 0).
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flatten(&self, ijk: &[usize]) -> usize {
        ijk.iter().take(self.d).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Signed wave vector of the flat index `idx`.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let ijk = self.unflatten(idx);
        let mut k = [0i64; 3];
        for a in 0..self.d {
            k[a] = self.wavenumber(ijk[a]);
        }
        k
    }

    /// Flat index of the signed wave vector `k` (taken modulo `n`).
    pub fn index_of(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &ka in k.iter().take(self.d) {
            idx = idx * self.n + ka.rem_euclid(n) as usize;
        }
        idx
    }

    /// Flat index of `-k` for the mode stored at `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let ijk = self.unflatten(idx);
        let mut out = 0usize;
        for &i in ijk.iter().take(self.d) {
            out = out * self.n + (self.n - i) % self.n;
        }
        out
    }

    pub fn retained(&self, k: &[i64; 3]) -> bool {
        let c = self.cutoff() as i64;
        k.iter().take(self.d).all(|ka| ka.abs() <= c)
    }

    /// `(2 pi |k|)^2` for the mode at `idx`.
    pub fn laplacian_symbol(&self, idx: usize) -> f64 {
        let k = self.mode(idx);
        let k2: i64 = k.iter().map(|x| x * x).sum();
        (2.0 * PI).powi(2) * k2 as f64
    }

    /// Physical coordinates of grid node `idx`.
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unflatten(idx);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = ijk[a] as f64 * h;
        }
        x
    }
}

/// Physical-space samples of a scalar field on the grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.len()] }
    }

    /// `sum values * cell volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Physical-space samples of a vector field, one array per component.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    pub spec: GridSpec,
    pub comps: Vec<Vec<f64>>,
}

impl VectorGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, comps: vec![vec![0.0; spec.len()]; spec.d()] }
    }

    /// Pointwise maximum of the Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.spec.len()).map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn integral(&self) -> Vec<f64> {
        let vol = self.spec.cell_volume();
        self.comps.iter().map(|c| c.iter().sum::<f64>() * vol).collect()
    }
}

/// Real vector field stored by its Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    spec: GridSpec,
    comps: Vec<Vec<Complex64>>,
    div_free: bool,
}

impl FourierField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, comps: vec![vec![ZERO; spec.len()]; spec.d()], div_free: true }
    }

    pub fn from_coeffs(spec: GridSpec, comps: Vec<Vec<Complex64>>, div_free: bool) -> Result<Self> {
        if comps.len() != spec.d() || comps.iter().any(|c| c.len() != spec.len()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient arrays do not match a {}-d grid of {} modes",
                spec.d(),
                spec.len()
            )));
        }
        Ok(Self { spec, comps, div_free })
    }

    /// Transform physical samples; the result is not flagged divergence-free.
    pub fn from_physical(grid: &VectorGrid) -> Self {
        let spec = grid.spec;
        let comps = grid
            .comps
            .iter()
            .map(|c| {
                let mut data: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft::forward(&mut data, spec.n(), spec.d());
                data
            })
            .collect();
        Self { spec, comps, div_free: false }
    }

    /// Constant field equal to `value` everywhere.
    pub fn constant(spec: GridSpec, value: &[f64]) -> Self {
        let mut field = Self::zeros(spec);
        for (c, &v) in value.iter().enumerate().take(spec.d()) {
            field.comps[c][0] = Complex64::new(v, 0.0);
        }
        field
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d()
    }

    pub fn is_div_free(&self) -> bool {
        self.div_free
    }

    pub fn set_div_free(&mut self, flag: bool) {
        self.div_free = flag;
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    /// Set the amplitude of mode `k` and its Hermitian partner `-k`.
    pub fn set_mode(&mut self, k: &[i64], amp: &[Complex64]) {
        let idx = self.spec.index_of(k);
        let conj = self.spec.conjugate_index(idx);
        for c in 0..self.dim() {
            self.comps[c][idx] = amp[c];
            self.comps[c][conj] = amp[c].conj();
        }
        if idx == conj {
            for c in 0..self.dim() {
                self.comps[c][idx].im = 0.0;
            }
        }
    }

    pub fn mode(&self, k: &[i64]) -> Vec<Complex64> {
        let idx = self.spec.index_of(k);
        self.comps.iter().map(|c| c[idx]).collect()
    }

    /// Spatial average, i.e. the real part of the zero mode.
    pub fn mean(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c[0].re).collect()
    }

    /// `||u||_{L^2}^2` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum()
    }

    /// L^2 inner product `<self, other>`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).flat_map(|(a, b)| a.iter().zip(b)).map(|(x, y)| (x.conj() * y).re).sum()
    }

    /// `||u - <u>||_{L^2}^2`, summed over the nonzero modes.
    pub fn fluctuation_norm_sq(&self) -> f64 {
        self.comps.iter().flat_map(|c| c[1..].iter()).map(|z| z.norm_sqr()).sum()
    }

    /// `||grad u||_{L^2}^2`.
    pub fn grad_l2_norm_sq(&self) -> f64 {
        (0..self.spec.len())
            .map(|i| {
                let sym = self.spec.laplacian_symbol(i);
                sym * self.comps.iter().map(|c| c[i].norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// Largest deviation from Hermitian symmetry, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for c in &self.comps {
            for (i, z) in c.iter().enumerate() {
                let j = self.spec.conjugate_index(i);
                defect = defect.max((z - c[j].conj()).norm());
                scale = scale.max(z.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// `max_k |k.c_k| / |k|`, relative to the largest coefficient.
    pub fn divergence_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..self.spec.len() {
            let k = self.spec.mode(i);
            let k2: i64 = k.iter().map(|x| x * x).sum();
            let mut dot = ZERO;
            for c in 0..self.dim() {
                dot += self.comps[c][i] * k[c] as f64;
                scale = scale.max(self.comps[c][i].norm());
            }
            if k2 > 0 {
                defect = defect.max(dot.norm() / (k2 as f64).sqrt());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Zero every mode outside the 2/3-rule band.
    pub fn dealias(&mut self) {
        for i in 0..self.spec.len() {
            if !self.spec.retained(&self.spec.mode(i)) {
                for c in &mut self.comps {
                    c[i] = ZERO;
                }
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q * a).collect())
            .collect();
        Self { spec: self.spec, comps, div_free: self.div_free && other.div_free }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let comps = self.comps.iter().map(|x| x.iter().map(|p| p * a).collect()).collect();
        Self { spec: self.spec, comps, div_free: self.div_free }
    }

    /// Physical samples on the `n^d` grid.
    pub fn to_physical(&self) -> VectorGrid {
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut data = c.clone();
                fft::inverse(&mut data, self.spec.n(), self.spec.d());
                data.into_iter().map(|z| z.re).collect()
            })
            .collect();
        VectorGrid { spec: self.spec, comps }
    }

    /// Spectral gradient: entry `[a][b]` holds the coefficients of `d u_a / d x_b`.
    pub fn gradient_coeffs(&self) -> Vec<Vec<Vec<Complex64>>> {
        let d = self.dim();
        (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| {
                        (0..self.spec.len())
                            .map(|i| {
                                let kb = self.spec.mode(i)[b] as f64;
                                self.comps[a][i] * Complex64::new(0.0, 2.0 * PI * kb)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Physical samples of the gradient, entry `[a][b]` is `d u_a / d x_b`.
    pub fn gradient_physical(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, d) = (self.spec.n(), self.spec.d());
        self.gradient_coeffs()
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|mut data| {
                        fft::inverse(&mut data, n, d);
                        data.into_iter().map(|z| z.re).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Copy onto a finer grid of `m >= n` modes per axis (zero padding).
    ///
    /// The Nyquist plane of the source is dropped; band-limited fields never populate it.
    pub fn padded(&self, m: usize) -> Result<Self> {
        let target = GridSpec::new(self.dim(), m)?;
        if m < self.spec.n() {
            return Err(Error::InvalidArgument(format!("cannot pad {} modes down to {m}", self.spec.n())));
        }
        let mut out = Self::zeros(target);
        let half = (self.spec.n() / 2) as i64;
        for i in 0..self.spec.len() {
            let k = self.spec.mode(i);
            if k.iter().take(self.dim()).any(|ka| ka.abs() >= half) {
                continue;
            }
            let j = target.index_of(&k);
            for c in 0..self.dim() {
                out.comps[c][j] = self.comps[c][i];
            }
        }
        out.div_free = self.div_free;
        Ok(out)
    }

    /// Value and gradient at an arbitrary point by direct trigonometric summation over the
    /// nonzero modes. Entry `[a][b]` of the gradient is `d u_a / d x_b`.
    pub fn eval_point(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim();
        let n = self.spec.n();
        // per-axis phases exp(2 i pi k x_a) for FFT index order
        let phases: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * self.spec.wavenumber(i) as f64 * x[a])).collect()
            })
            .collect();
        let mut val = vec![0.0; d];
        let mut grad = vec![vec![0.0; d]; d];
        for i in 0..self.spec.len() {
            if self.comps.iter().all(|c| c[i] == ZERO) {
                continue;
            }
            let ijk = self.spec.unflatten(i);
            let mut e = Complex64::new(1.0, 0.0);
            for a in 0..d {
                e *= phases[a][ijk[a]];
            }
            let k = self.spec.mode(i);
            for a in 0..d {
                let z = self.comps[a][i] * e;
                val[a] += z.re;
                for b in 0..d {
                    // d/dx_b of Re(c e) = Re(2 i pi k_b c e) = -2 pi k_b Im(c e)
                    grad[a][b] -= 2.0 * PI * k[b] as f64 * z.im;
                }
            }
        }
        (val, grad)
    }
}
