use super::SimState;
use crate::error::{Error, Result};

/// Root of `delta exp(delta) = 1/9`, by bisection.
pub fn straightening_threshold() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < 1.0 / 9.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Constants used by the monitors.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorConfig {
    /// Constant of the strong-existence smallness criterion.
    pub c_star: f64,
    /// Threshold on `int_1^t ||grad u||_inf`.
    pub delta: f64,
    /// Poincare (spectral gap) constant, `(2 pi)^2` on the unit torus.
    pub c_p: f64,
    pub report_stride: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            c_star: 1.0,
            delta: straightening_threshold(),
            c_p: (2.0 * std::f64::consts::PI).powi(2),
            report_stride: 1,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.c_star > 0.0) {
            errors.push(format!("monitor.C_star = {} must be positive", self.c_star));
        }
        if !(self.delta > 0.0) || self.delta * self.delta.exp() > 1.0 / 9.0 {
            errors.push(format!("monitor.delta = {} must satisfy 0 < delta exp(delta) <= 1/9", self.delta));
        }
        if !(self.c_p > 0.0) {
            errors.push(format!("monitor.c_P = {} must be positive", self.c_p));
        }
        if self.report_stride == 0 {
            errors.push("io.stride must be at least 1".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// `||u0||^2_{H^1/2} + C* int_0^t ||F||^2_{H^-1/2}` and whether it is below `1 / C*^2`.
pub fn strong_existence_criterion(state: &SimState, u0_norm: f64, cfg: &MonitorConfig) -> (f64, bool) {
    let value = u0_norm * u0_norm + cfg.c_star * state.acc.force_int;
    (value, value < 1.0 / (cfg.c_star * cfg.c_star))
}

/// `int_1^t ||grad u||_inf` and whether it is below `delta`.
pub fn bootstrap_monitor(state: &SimState, cfg: &MonitorConfig) -> (f64, bool) {
    let gradint = state.acc.grad_int_1;
    (gradint, gradint < cfg.delta)
}
