//! Time-dependent fluid velocity reconstructed from stored snapshots.

use crate::error::{Error, Result};
use crate::particles::{wrap_unit, VelocitySampler};
use crate::spectral::{grad_sup_norm, FourierField, GridSpec};

/// Spatial reconstruction between grid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpatialEval {
    /// Multilinear interpolation of physical samples on a grid refined `refine` times.
    Cic { refine: usize },
    /// Direct trigonometric summation (exact for the stored coefficients, slow).
    Spectral,
}

impl Default for SpatialEval {
    fn default() -> Self {
        SpatialEval::Cic { refine: 1 }
    }
}

/// Velocity and Jacobian `[a][b] = d u_a / d x_b` at one space-time point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VelocitySample {
    pub value: [f64; 3],
    pub grad: [[f64; 3]; 3],
}

/// Physical samples of one snapshot on the evaluation grid.
#[derive(Clone, Debug)]
struct SnapshotGrid {
    value: Vec<Vec<f64>>,
    /// Flattened `[a * d + b]`.
    grad: Vec<Vec<f64>>,
}

/// Snapshots `u(t_k)` for `t_0 < ... < t_M`, linear in time between snapshots and equal
/// to the constant drift after `t_M`.
#[derive(Clone, Debug)]
pub struct VelocityHistory {
    times: Vec<f64>,
    fields: Vec<FourierField>,
    drift: Vec<f64>,
    eval: SpatialEval,
    eval_spec: GridSpec,
    grids: Vec<SnapshotGrid>,
    grad_sup: Vec<f64>,
    u_sup: Vec<f64>,
    tail_energy_ratio: Option<f64>,
}

/// Energy ratio `E(t_M) / E(0)` below which replacing the field by its drift after `t_M`
/// is considered justified.
pub const TAIL_SWITCH_RATIO: f64 = 1e-10;

impl VelocityHistory {
    pub fn new(times: Vec<f64>, fields: Vec<FourierField>, drift: Vec<f64>) -> Result<Self> {
        Self::with_evaluation(times, fields, drift, SpatialEval::default())
    }

    pub fn with_evaluation(
        times: Vec<f64>,
        fields: Vec<FourierField>,
        drift: Vec<f64>,
        eval: SpatialEval,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument(format!(
                "history needs one field per time ({} times, {} fields)",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidArgument("snapshot times must be finite and strictly increasing".into()));
        }
        let spec = fields[0].spec();
        if fields.iter().any(|f| f.spec() != spec) {
            return Err(Error::InvalidArgument("snapshots live on different grids".into()));
        }
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite("velocity history"));
        }
        if drift.len() != spec.d() {
            return Err(Error::InvalidArgument(format!("drift has {} components, expected {}", drift.len(), spec.d())));
        }
        let (eval_spec, grids) = match eval {
            SpatialEval::Cic { refine } => {
                if refine == 0 {
                    return Err(Error::InvalidArgument("refinement factor must be at least 1".into()));
                }
                let eval_spec = GridSpec::new(spec.d(), refine * spec.n())?;
                let grids = fields
                    .iter()
                    .map(|f| {
                        let fine = if refine == 1 { f.clone() } else { f.padded(refine * spec.n())? };
                        let value = fine.to_physical().comps;
                        let grad = fine.gradient_physical().into_iter().flatten().collect();
                        Ok(SnapshotGrid { value, grad })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (eval_spec, grids)
            }
            SpatialEval::Spectral => (spec, Vec::new()),
        };
        let grad_sup = fields.iter().map(grad_sup_norm).collect();
        let u_sup = fields.iter().map(|f| f.to_physical().sup_norm()).collect();
        Ok(Self { times, fields, drift, eval, eval_spec, grids, grad_sup, u_sup, tail_energy_ratio: None })
    }

    /// History with `u = value` everywhere on `[0, t_end]`, drifting at `value` afterwards.
    pub fn constant(spec: GridSpec, value: &[f64], t_end: f64) -> Result<Self> {
        let field = FourierField::constant(spec, value);
        Self::new(vec![0.0, t_end], vec![field.clone(), field], value.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn spec(&self) -> GridSpec {
        self.fields[0].spec()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.fields
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("history is never empty")
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn evaluation(&self) -> SpatialEval {
        self.eval
    }

    /// `||grad u(t_k)||_inf` at every snapshot.
    pub fn grad_sup(&self) -> &[f64] {
        &self.grad_sup
    }

    /// `||u(t_k)||_inf` at every snapshot.
    pub fn u_sup(&self) -> &[f64] {
        &self.u_sup
    }

    /// Trapezoid estimate of `int_{t_0}^inf ||grad u||_inf`; the drift tail contributes nothing.
    pub fn grad_integral(&self) -> f64 {
        self.times.windows(2).zip(self.grad_sup.windows(2)).map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0] + g[1])).sum()
    }

    /// Record `E(t_M) / E(0)` for the tail-model justification.
    pub fn set_tail_energy_ratio(&mut self, ratio: f64) {
        self.tail_energy_ratio = Some(ratio);
    }

    pub fn tail_energy_ratio(&self) -> Option<f64> {
        self.tail_energy_ratio
    }

    /// Whether the recorded energy ratio is below [`TAIL_SWITCH_RATIO`].
    pub fn tail_justified(&self) -> bool {
        self.tail_energy_ratio.is_some_and(|r| r < TAIL_SWITCH_RATIO)
    }

    /// Check that `[from, to]` lies inside the stored snapshots.
    pub fn covers(&self, from: f64, to: f64) -> Result<()> {
        for t in [from, to] {
            if t < self.start() || t > self.end() {
                return Err(Error::HistoryRange { t, start: self.start(), end: self.end() });
            }
        }
        Ok(())
    }

    /// Snapshot pair and weight of the later one; `None` past the last snapshot.
    fn locate(&self, t: f64) -> Result<Option<(usize, f64)>> {
        if t < self.start() || t.is_nan() {
            return Err(Error::HistoryRange { t, start: self.start(), end: self.end() });
        }
        if t > self.end() {
            return Ok(None);
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k >= self.times.len() {
            return Ok(Some((self.times.len() - 1, 0.0)));
        }
        let lo = k - 1;
        let theta = (t - self.times[lo]) / (self.times[k] - self.times[lo]);
        Ok(Some((lo, theta)))
    }

    /// Velocity and gradient at time `t` and point `x` (any real coordinates, wrapped).
    pub fn sample(&self, t: f64, x: &[f64]) -> Result<VelocitySample> {
        let d = self.dim();
        let Some((lo, theta)) = self.locate(t)? else {
            let mut out = VelocitySample::default();
            out.value[..d].copy_from_slice(&self.drift);
            return Ok(out);
        };
        let mut pos = [0.0; 3];
        for a in 0..d {
            pos[a] = wrap_unit(x[a]);
        }
        let one = |k: usize| self.sample_snapshot(k, &pos[..d]);
        let mut out = one(lo);
        if theta > 0.0 {
            let hi = one(lo + 1);
            for a in 0..d {
                out.value[a] = (1.0 - theta) * out.value[a] + theta * hi.value[a];
                for b in 0..d {
                    out.grad[a][b] = (1.0 - theta) * out.grad[a][b] + theta * hi.grad[a][b];
                }
            }
        }
        Ok(out)
    }

    /// Velocity only, at time `t` and point `x`.
    pub fn velocity(&self, t: f64, x: &[f64]) -> Result<[f64; 3]> {
        Ok(self.sample(t, x)?.value)
    }

    fn sample_snapshot(&self, k: usize, x: &[f64]) -> VelocitySample {
        let d = self.dim();
        let mut out = VelocitySample::default();
        match self.eval {
            SpatialEval::Cic { .. } => {
                let (idx, wts, count) = crate::particles::cic::stencil(&self.eval_spec, x);
                let grid = &self.grids[k];
                for a in 0..d {
                    out.value[a] = (0..count).map(|c| wts[c] * grid.value[a][idx[c]]).sum();
                    for b in 0..d {
                        out.grad[a][b] = (0..count).map(|c| wts[c] * grid.grad[a * d + b][idx[c]]).sum();
                    }
                }
            }
            SpatialEval::Spectral => {
                let (val, grad) = self.fields[k].eval_point(x);
                for a in 0..d {
                    out.value[a] = val[a];
                    for b in 0..d {
                        out.grad[a][b] = grad[a][b];
                    }
                }
            }
        }
        out
    }

    /// The field at a fixed time as a [`VelocitySampler`].
    pub fn at_time(&self, t: f64) -> Result<FrozenHistory<'_>> {
        self.locate(t)?;
        Ok(FrozenHistory { history: self, t })
    }
}

/// A [`VelocityHistory`] frozen at one time.
#[derive(Clone, Copy, Debug)]
pub struct FrozenHistory<'a> {
    history: &'a VelocityHistory,
    t: f64,
}

impl VelocitySampler for FrozenHistory<'_> {
    fn dim(&self) -> usize {
        self.history.dim()
    }

    fn sample(&self, x: &[f64]) -> [f64; 3] {
        self.history.velocity(self.t, x).expect("time validated at construction")
    }
}
