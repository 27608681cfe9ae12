//! Flat `key = value` run configuration with full validation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::coupling::{MonitorConfig, RunPlan, SimState};
use crate::error::{Error, Result};
use crate::particles::{sample_fluid, FluidInit, InitialDataSpec, SpatialProfile, VelocityProfile};
use crate::spectral::{GridSpec, Scheme};

/// Smallest admissible decay exponent is strictly above this value.
pub const MIN_DECAY_EXPONENT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleConfig {
    pub per_cell: usize,
    pub nv: usize,
    /// Exponent of the pointwise decay `N_q(f0)`.
    pub q: f64,
    /// Order of the recorded velocity moment.
    pub alpha: f64,
    /// Fixed half-width of the velocity box; sized from `tail_tol` when `None`.
    pub v_max: Option<f64>,
    pub tail_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpatialFamily {
    Uniform,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityFamily {
    Gaussian,
    PolyTail,
    Compact,
    Monokinetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluidFamily {
    Zero,
    Random,
    TaylorGreen,
    Shear,
}

/// Initial data families and every parameter any of them may use.
#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub spatial: SpatialFamily,
    pub spatial_amplitude: f64,
    pub spatial_wavenumber: i64,
    pub velocity: VelocityFamily,
    pub theta: f64,
    /// Mean of the Gaussian or the single velocity of the monokinetic family.
    pub mean: Vec<f64>,
    pub tail_q: f64,
    pub radius: f64,
    pub power: f64,
    pub mass: f64,
    pub fluid: FluidFamily,
    /// Target homogeneous `H^{1/2}` norm of the random field.
    pub h_half: f64,
    pub kmax: usize,
    pub fluid_amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IoConfig {
    pub out: PathBuf,
    /// Steps between diagnostics records.
    pub stride: usize,
    /// Steps between stored velocity snapshots (0 disables them).
    pub snapshot_stride: usize,
    /// Steps between checkpoints (0 writes only the final one).
    pub checkpoint_stride: usize,
    pub svg: bool,
    /// Keep every `k`-th particle in the final CSV dump (0 disables it).
    pub subsample_stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileConfig {
    pub velocity_nodes: usize,
    pub h: f64,
    pub tol: f64,
    pub refine: usize,
    /// Use every `k`-th snapshot as the time grid.
    pub snapshot_step: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub particles: ParticleConfig,
    pub init: InitConfig,
    pub time: TimeConfig,
    pub monitor: MonitorConfig,
    pub io: IoConfig,
    pub profile: ProfileConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Pulls typed values out of the raw entries, collecting every problem.
struct Reader {
    entries: BTreeMap<String, Entry>,
    errors: Vec<String>,
}

impl Reader {
    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parsed<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>, what: &str) -> T {
        match self.raw(key) {
            None => default,
            Some(entry) => match parse(&entry.value) {
                Some(v) => v,
                None => {
                    self.errors.push(format!("line {}: {key} = '{}' is not {what}", entry.line, entry.value));
                    default
                }
            },
        }
    }

    fn num<T: FromStr>(&mut self, key: &str, default: T, what: &str) -> T {
        self.parsed(key, default, |s| s.parse().ok(), what)
    }

    fn real(&mut self, key: &str, default: f64) -> f64 {
        self.parsed(key, default, |s| s.parse::<f64>().ok().filter(|v| v.is_finite()), "a finite number")
    }

    fn list(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        self.parsed(
            key,
            default,
            |s| s.split(',').map(|c| c.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect(),
            "a comma-separated list of numbers",
        )
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> T {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        let what = format!("one of {}", names.join(", "));
        self.parsed(key, default, |s| options.iter().find(|o| o.0 == s).map(|o| o.1), &what)
    }
}

const SPATIAL: &[(&str, SpatialFamily)] = &[("uniform", SpatialFamily::Uniform), ("cosine", SpatialFamily::Cosine)];
const VELOCITY: &[(&str, VelocityFamily)] = &[
    ("gaussian", VelocityFamily::Gaussian),
    ("polytail", VelocityFamily::PolyTail),
    ("compact", VelocityFamily::Compact),
    ("monokinetic", VelocityFamily::Monokinetic),
];
const FLUID: &[(&str, FluidFamily)] = &[
    ("zero", FluidFamily::Zero),
    ("random", FluidFamily::Random),
    ("taylor_green", FluidFamily::TaylorGreen),
    ("shear", FluidFamily::Shear),
];
const SCHEME: &[(&str, Scheme)] = &[("lie", Scheme::Lie), ("strang", Scheme::Strang)];
const BOOL: &[(&str, bool)] = &[("true", true), ("false", false)];

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], value: T) -> &'static str {
    options.iter().find(|o| o.1 == value).map(|o| o.0).expect("every variant is listed")
}

/// Parse and validate a configuration. Missing keys take their defaults; every problem
/// (syntax, duplicate or unknown keys, type mismatches, constraint violations) is
/// reported at once.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(format!("line {line}: expected 'key = value', found '{content}'"));
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if let Some(first) = entries.get(&key) {
            errors.push(format!("line {line}: duplicate key {key} (first set on line {})", first.line));
            continue;
        }
        entries.insert(key, Entry { value, line });
    }
    let mut r = Reader { entries, errors };
    let monitor_default = MonitorConfig::default();

    let grid = GridConfig { d: r.num("grid.d", 2, "an integer"), n: r.num("grid.n", 16, "an integer") };
    let d = grid.d;
    let particles = ParticleConfig {
        per_cell: r.num("particles.per_cell", 1, "an integer"),
        nv: r.num("particles.nv", 8, "an integer"),
        q: r.real("particles.q", 5.0),
        alpha: r.real("particles.alpha", 2.0),
        v_max: r.parsed(
            "particles.v_max",
            None,
            |s| if s == "auto" { Some(None) } else { s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some) },
            "'auto' or a number",
        ),
        tail_tol: r.real("particles.tail_tol", 1e-8),
    };
    let init = InitConfig {
        spatial: r.choice("init.spatial", SpatialFamily::Uniform, SPATIAL),
        spatial_amplitude: r.real("init.spatial.amplitude", 0.5),
        spatial_wavenumber: r.num("init.spatial.wavenumber", 1, "an integer"),
        velocity: r.choice("init.velocity", VelocityFamily::Gaussian, VELOCITY),
        theta: r.real("init.velocity.theta", 0.2),
        mean: r.list("init.velocity.mean", vec![0.0; d.clamp(2, 3)]),
        tail_q: r.real("init.velocity.q", 6.0),
        radius: r.real("init.velocity.radius", 1.0),
        power: r.real("init.velocity.power", 0.0),
        mass: r.real("init.mass", 1.0),
        fluid: r.choice("init.fluid", FluidFamily::Random, FLUID),
        h_half: r.real("init.fluid.h_half", 0.05),
        kmax: r.num("init.fluid.kmax", 2, "an integer"),
        fluid_amplitude: r.real("init.fluid.amplitude", 0.05),
        seed: r.num("init.seed", 0, "an unsigned integer"),
    };
    let time = TimeConfig {
        dt: r.real("time.dt", 0.01),
        t_final: r.real("time.t_final", 10.0),
        scheme: r.choice("time.scheme", Scheme::Lie, SCHEME),
    };
    let stride = r.num("io.stride", 10, "an integer");
    let monitor = MonitorConfig {
        c_star: r.real("monitor.C_star", monitor_default.c_star),
        delta: r.real("monitor.delta", monitor_default.delta),
        c_p: r.real("monitor.c_P", monitor_default.c_p),
        report_stride: stride,
    };
    let io = IoConfig {
        out: PathBuf::from(r.raw("io.out").map(|e| e.value).unwrap_or_else(|| "out".into())),
        stride,
        snapshot_stride: r.num("io.snapshot_stride", 10, "an integer"),
        checkpoint_stride: r.num("io.checkpoint_stride", 0, "an integer"),
        svg: r.choice("io.svg", true, BOOL),
        subsample_stride: r.num("io.subsample_stride", 0, "an integer"),
    };
    let profile = ProfileConfig {
        velocity_nodes: r.num("profile.velocity_nodes", 16, "an integer"),
        h: r.real("profile.h", 1e-4),
        tol: r.real("profile.tol", 1e-10),
        refine: r.num("profile.refine", 1, "an integer"),
        snapshot_step: r.num("profile.snapshot_step", 1, "an integer"),
    };
    let mut errors = r.errors;
    for (key, entry) in r.entries {
        errors.push(format!("line {}: unknown key {key}", entry.line));
    }
    let config = RunConfig { grid, particles, init, time, monitor, io, profile };
    errors.extend(config.violations());
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(errors))
    }
}

impl RunConfig {
    /// Constraint violations, all of them.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                out.push(msg);
            }
        };
        let d = self.grid.d;
        check((2..=3).contains(&d), format!("grid.d = {d} must be 2 or 3"));
        check(
            self.grid.n >= 8 && self.grid.n.is_multiple_of(2),
            format!("grid.n = {} must be even and at least 8", self.grid.n),
        );
        let p = &self.particles;
        check(
            p.q > MIN_DECAY_EXPONENT,
            format!("particles.q = {} violates the decay hypothesis: N_q(f0) must be finite for some q > 4", p.q),
        );
        check(p.per_cell >= 1, "particles.per_cell must be at least 1".into());
        check(p.nv >= 1, "particles.nv must be at least 1".into());
        check(p.alpha >= 0.0, format!("particles.alpha = {} must be nonnegative", p.alpha));
        check(p.tail_tol > 0.0 && p.tail_tol < 1.0, format!("particles.tail_tol = {} must lie in (0, 1)", p.tail_tol));
        if let Some(v) = p.v_max {
            check(v > 0.0, format!("particles.v_max = {v} must be positive"));
        }
        let i = &self.init;
        check(i.mass >= 0.0, format!("init.mass = {} must be nonnegative", i.mass));
        if i.spatial == SpatialFamily::Cosine {
            check(
                i.spatial_amplitude.abs() < 1.0,
                format!("init.spatial.amplitude = {} must satisfy |a| < 1", i.spatial_amplitude),
            );
        }
        match i.velocity {
            VelocityFamily::Gaussian => {
                check(i.theta > 0.0, format!("init.velocity.theta = {} must be positive", i.theta));
                check(i.mean.len() == d, format!("init.velocity.mean has {} entries, expected {d}", i.mean.len()));
            }
            VelocityFamily::PolyTail => {
                check(i.tail_q > d as f64, format!("init.velocity.q = {} must exceed the dimension {d}", i.tail_q));
                check(
                    i.tail_q >= p.q,
                    format!("N_q(f0) is infinite: init.velocity.q = {} is below particles.q = {}", i.tail_q, p.q),
                );
            }
            VelocityFamily::Compact => {
                check(i.radius > 0.0, format!("init.velocity.radius = {} must be positive", i.radius));
                check(i.power >= 0.0, format!("init.velocity.power = {} must be nonnegative", i.power));
            }
            VelocityFamily::Monokinetic => {
                check(i.mean.len() == d, format!("init.velocity.mean has {} entries, expected {d}", i.mean.len()));
            }
        }
        if i.fluid == FluidFamily::Random {
            let cutoff = if self.grid.n >= 8 { (self.grid.n - 1) / 3 } else { 0 };
            check(i.h_half >= 0.0, format!("init.fluid.h_half = {} must be nonnegative", i.h_half));
            check(i.kmax >= 1 && i.kmax <= cutoff, format!("init.fluid.kmax = {} must lie in 1..={cutoff}", i.kmax));
        }
        let t = &self.time;
        check(t.dt > 0.0, format!("time.dt = {} must be positive", t.dt));
        check(t.t_final > 0.0, format!("time.t_final = {} must be positive", t.t_final));
        check(t.dt <= t.t_final, "time.dt must not exceed time.t_final".into());
        let pr = &self.profile;
        check(pr.velocity_nodes >= 1, "profile.velocity_nodes must be at least 1".into());
        check(pr.h > 0.0, format!("profile.h = {} must be positive", pr.h));
        check(pr.tol > 0.0, format!("profile.tol = {} must be positive", pr.tol));
        check(pr.refine >= 1, "profile.refine must be at least 1".into());
        check(pr.snapshot_step >= 1, "profile.snapshot_step must be at least 1".into());
        if let Err(Error::Config(list)) = self.monitor.validate() {
            out.extend(list);
        }
        out
    }

    /// Every key with its value; parsing this text gives back the same configuration.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let i = &self.init;
        let p = &self.particles;
        let rows: Vec<(&str, String)> = vec![
            ("grid.d", self.grid.d.to_string()),
            ("grid.n", self.grid.n.to_string()),
            ("particles.per_cell", p.per_cell.to_string()),
            ("particles.nv", p.nv.to_string()),
            ("particles.q", p.q.to_string()),
            ("particles.alpha", p.alpha.to_string()),
            ("particles.v_max", p.v_max.map_or("auto".into(), |v| v.to_string())),
            ("particles.tail_tol", p.tail_tol.to_string()),
            ("init.spatial", name_of(SPATIAL, i.spatial).into()),
            ("init.spatial.amplitude", i.spatial_amplitude.to_string()),
            ("init.spatial.wavenumber", i.spatial_wavenumber.to_string()),
            ("init.velocity", name_of(VELOCITY, i.velocity).into()),
            ("init.velocity.theta", i.theta.to_string()),
            ("init.velocity.mean", list(&i.mean)),
            ("init.velocity.q", i.tail_q.to_string()),
            ("init.velocity.radius", i.radius.to_string()),
            ("init.velocity.power", i.power.to_string()),
            ("init.mass", i.mass.to_string()),
            ("init.fluid", name_of(FLUID, i.fluid).into()),
            ("init.fluid.h_half", i.h_half.to_string()),
            ("init.fluid.kmax", i.kmax.to_string()),
            ("init.fluid.amplitude", i.fluid_amplitude.to_string()),
            ("init.seed", i.seed.to_string()),
            ("time.dt", self.time.dt.to_string()),
            ("time.t_final", self.time.t_final.to_string()),
            ("time.scheme", name_of(SCHEME, self.time.scheme).into()),
            ("monitor.C_star", self.monitor.c_star.to_string()),
            ("monitor.delta", self.monitor.delta.to_string()),
            ("monitor.c_P", self.monitor.c_p.to_string()),
            ("io.out", self.io.out.display().to_string()),
            ("io.stride", self.io.stride.to_string()),
            ("io.snapshot_stride", self.io.snapshot_stride.to_string()),
            ("io.checkpoint_stride", self.io.checkpoint_stride.to_string()),
            ("io.svg", self.io.svg.to_string()),
            ("io.subsample_stride", self.io.subsample_stride.to_string()),
            ("profile.velocity_nodes", self.profile.velocity_nodes.to_string()),
            ("profile.h", self.profile.h.to_string()),
            ("profile.tol", self.profile.tol.to_string()),
            ("profile.refine", self.profile.refine.to_string()),
            ("profile.snapshot_step", self.profile.snapshot_step.to_string()),
        ];
        let mut out = String::from("# effective configuration (all defaults materialized)\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.d, self.grid.n)
    }

    pub fn velocity_profile(&self) -> VelocityProfile {
        let i = &self.init;
        match i.velocity {
            VelocityFamily::Gaussian => VelocityProfile::Gaussian { theta: i.theta, mean: i.mean.clone() },
            VelocityFamily::PolyTail => VelocityProfile::PolyTail { q: i.tail_q },
            VelocityFamily::Compact => VelocityProfile::Compact { radius: i.radius, power: i.power },
            VelocityFamily::Monokinetic => VelocityProfile::Monokinetic { velocity: i.mean.clone() },
        }
    }

    pub fn initial_data(&self) -> InitialDataSpec {
        let i = &self.init;
        InitialDataSpec {
            spatial: match i.spatial {
                SpatialFamily::Uniform => SpatialProfile::Uniform,
                SpatialFamily::Cosine => {
                    SpatialProfile::Cosine { amplitude: i.spatial_amplitude, wavenumber: i.spatial_wavenumber }
                }
            },
            velocity: self.velocity_profile(),
            mass: i.mass,
            per_cell: self.particles.per_cell,
            nv: self.particles.nv,
            tail_tol: self.particles.tail_tol,
            v_max: self.particles.v_max,
            fluid: match i.fluid {
                FluidFamily::Zero => FluidInit::Zero,
                FluidFamily::Random => FluidInit::Random { h_half_norm: i.h_half, kmax: i.kmax },
                FluidFamily::TaylorGreen => FluidInit::TaylorGreen { amplitude: i.fluid_amplitude },
                FluidFamily::Shear => FluidInit::Shear { amplitude: i.fluid_amplitude },
            },
            seed: i.seed,
        }
    }

    pub fn run_plan(&self) -> RunPlan {
        RunPlan {
            dt: self.time.dt,
            t_final: self.time.t_final,
            scheme: self.time.scheme,
            monitor: self.monitor.clone(),
            alpha: self.particles.alpha,
        }
    }

    /// Initial fluid and particles, fully determined by the configuration.
    pub fn initial_state(&self) -> Result<SimState> {
        let spec = self.grid_spec()?;
        let data = self.initial_data();
        let u = sample_fluid(&data.fluid, &spec, data.seed)?;
        let mut particles = data.build_particles(&spec)?;
        particles.meta.q = self.particles.q;
        SimState::new(u, particles)
    }
}
