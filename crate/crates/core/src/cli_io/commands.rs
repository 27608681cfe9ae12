//! The `run`, `resume`, `diag` and `profile` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::asymptotics::{
    contraction_constant, jacobian_a, rho_infinity, rho_infinity_pushforward, PicardOptions, ProfileOptions,
    SpatialEval, VelocityHistory,
};
use crate::coupling::{run, SimState};
use crate::diagnostics::{fit_decay_rate, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::particles::{deposit, estimate_nq, write_subsample_csv, ParticleEnsemble, ENSEMBLE_FORMAT_VERSION};
use crate::spectral::{read_field, write_field, ScalarGrid, FIELD_FORMAT_VERSION};
use crate::transport::{exponential_tail, jabin_cauchy_bound, w1_exact, Histogram};

use super::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION};
use super::config::{parse_config, RunConfig, VelocityFamily};
use super::series::{read_series, series_csv};
use super::svg::run_charts;

pub const CONFIG_FILE: &str = "config.effective.txt";
pub const SERIES_FILE: &str = "series.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const SNAPSHOT_DIR: &str = "snapshots";
pub const PARTICLES_FILE: &str = "particles.csv";
pub const DIAG_FILE: &str = "diag_summary.txt";
pub const PROFILE_FILE: &str = "profile_summary.txt";

/// Constant in `W1(rho_bar(T), rho_inf) <= C int_T^inf E^{1/2}`: the integrand of the
/// Cauchy estimate is at most `sqrt(2a + c^2 / 2) <= 2 E^{1/2}`.
pub const ASYMPTOTIC_BOUND_CONSTANT: f64 = 2.0;

/// Final state and full series of a run or resumed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    pub out: PathBuf,
}

/// Write `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn snapshot_path(out: &Path, step: u64) -> PathBuf {
    out.join(SNAPSHOT_DIR).join(format!("u_{step:08}.bin"))
}

fn write_snapshot(out: &Path, state: &SimState) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, &state.u)?;
    write_atomic(&snapshot_path(out, state.step), &buf)
}

fn metadata_text(config: &RunConfig, state: &SimState) -> Result<String> {
    let d = config.grid.d;
    let data = config.initial_data();
    let nq = match config.init.velocity {
        VelocityFamily::Monokinetic => "unsupported".to_string(),
        _ => estimate_nq(&data, config.particles.q, d)?.to_string(),
    };
    let meta = &state.particles.meta;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("crate_version", env!("CARGO_PKG_VERSION").into());
    put("threads", rayon::current_num_threads().to_string());
    put("particles", state.particles.len().to_string());
    put("seed", config.init.seed.to_string());
    put("tail_mass", meta.tail_mass.to_string());
    put("v_max", meta.v_max.to_string());
    put("n_q", nq);
    put("q", config.particles.q.to_string());
    put("dt_max_initial", state.dt_max().to_string());
    put("total_steps", config.run_plan().total_steps().to_string());
    put("checkpoint_format", CHECKPOINT_FORMAT_VERSION.to_string());
    put("field_format", FIELD_FORMAT_VERSION.to_string());
    put("ensemble_format", ENSEMBLE_FORMAT_VERSION.to_string());
    Ok(out)
}

/// Advance `state` to the configured final time, writing snapshots, checkpoints, the
/// series and charts into `out`. `previous` holds the records of earlier segments.
fn execute(
    config: &RunConfig,
    mut state: SimState,
    previous: Vec<DiagnosticsRecord>,
    out: &Path,
) -> Result<RunOutcome> {
    let plan = config.run_plan();
    let config_text = config.to_text();
    let snap = config.io.snapshot_stride as u64;
    let every = config.io.checkpoint_stride as u64;
    let new = run(&mut state, &plan, |s, recs| {
        if snap > 0 && s.step % snap == 0 {
            write_snapshot(out, s)?;
        }
        if every > 0 && s.step % every == 0 {
            let records = previous.iter().chain(recs).cloned().collect();
            let ckpt = Checkpoint { config_text: config_text.clone(), state: s.clone(), records };
            save_checkpoint(&out.join(CHECKPOINT_FILE), &ckpt)?;
        }
        Ok(())
    })?;
    let mut records = previous;
    records.extend(new);
    if snap > 0 && !snapshot_path(out, state.step).exists() {
        write_snapshot(out, &state)?;
    }
    let d = state.dim();
    write_atomic(&out.join(SERIES_FILE), series_csv(&records, d).as_bytes())?;
    let ckpt = Checkpoint { config_text, state, records };
    save_checkpoint(&out.join(CHECKPOINT_FILE), &ckpt)?;
    if config.io.svg {
        for (name, svg) in run_charts(&ckpt.records) {
            write_atomic(&out.join(name), svg.as_bytes())?;
        }
    }
    if config.io.subsample_stride > 0 {
        let mut buf = Vec::new();
        write_subsample_csv(&mut buf, &ckpt.state.particles, config.io.subsample_stride)?;
        write_atomic(&out.join(PARTICLES_FILE), &buf)?;
    }
    Ok(RunOutcome { state: ckpt.state, records: ckpt.records, out: out.to_path_buf() })
}

/// Start a run from the initial data described by `config`.
pub fn run_command(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let mut config = config.clone();
    config.io.out = out.to_path_buf();
    fs::create_dir_all(out.join(SNAPSHOT_DIR))?;
    write_atomic(&out.join(CONFIG_FILE), config.to_text().as_bytes())?;
    let state = config.initial_state()?;
    write_atomic(&out.join(METADATA_FILE), metadata_text(&config, &state)?.as_bytes())?;
    if config.io.snapshot_stride > 0 {
        write_snapshot(out, &state)?;
    }
    execute(&config, state, Vec::new(), out)
}

/// Continue the run stored in `run_dir`, optionally to a later final time. Snapshots of
/// the earlier segment are copied when `out` differs from `run_dir`.
pub fn resume_command(run_dir: &Path, out: &Path, t_final: Option<f64>) -> Result<RunOutcome> {
    let ckpt = load_checkpoint(&run_dir.join(CHECKPOINT_FILE))?;
    let mut config = parse_config(&ckpt.config_text)?;
    if let Some(t) = t_final {
        config.time.t_final = t;
        let errors = config.violations();
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
    }
    if ckpt.state.t > config.time.t_final + 0.5 * config.time.dt {
        return Err(Error::Config(vec![format!(
            "time.t_final = {} lies before the checkpoint time {}",
            config.time.t_final, ckpt.state.t
        )]));
    }
    config.io.out = out.to_path_buf();
    fs::create_dir_all(out.join(SNAPSHOT_DIR))?;
    if fs::canonicalize(run_dir)? != fs::canonicalize(out)? {
        let src = run_dir.join(SNAPSHOT_DIR);
        if src.is_dir() {
            for entry in fs::read_dir(src)? {
                let entry = entry?;
                fs::copy(entry.path(), out.join(SNAPSHOT_DIR).join(entry.file_name()))?;
            }
        }
        let meta = run_dir.join(METADATA_FILE);
        if meta.exists() {
            fs::copy(meta, out.join(METADATA_FILE))?;
        }
    }
    write_atomic(&out.join(CONFIG_FILE), config.to_text().as_bytes())?;
    execute(&config, ckpt.state, ckpt.records, out)
}

/// Headline numbers of a stored series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagSummary {
    pub samples: usize,
    pub t_end: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub modulated_initial: f64,
    pub modulated_final: f64,
    pub max_mass_drift: f64,
    pub max_momentum_drift: f64,
    pub max_energy_residual: f64,
    /// `max |(modulated - E) + |<u0 + j0>|^2 / 4|`.
    pub max_emod_offset: f64,
    /// `min (D - lambda E_mod) / E_mod(0)` with `lambda` from the running density bound.
    pub min_decay_margin: f64,
    /// Exponential fit of the modulated energy over `t >= 1`, when enough samples exist.
    pub decay_rate: Option<f64>,
    pub decay_r_squared: Option<f64>,
    /// Last sample time up to which both bootstrap conditions held throughout.
    pub tstar: f64,
}

pub fn summarize(records: &[DiagnosticsRecord]) -> Result<DiagSummary> {
    let first = records.first().ok_or_else(|| Error::InvalidArgument("empty series".into()))?;
    let last = records.last().expect("nonempty");
    let e0 = first.modulated_energy;
    let max = |f: &dyn Fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let window: Vec<(f64, f64)> =
        records.iter().filter(|r| r.t >= 1.0 && r.modulated_energy > 0.0).map(|r| (r.t, r.modulated_energy)).collect();
    let fit = fit_decay_rate(&window).ok();
    let tstar = records.iter().take_while(|r| r.tstar_ok()).last().map_or(0.0, |r| r.t);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    Ok(DiagSummary {
        samples: records.len(),
        t_end: last.t,
        energy_initial: first.energy,
        energy_final: last.energy,
        modulated_initial: e0,
        modulated_final: last.modulated_energy,
        max_mass_drift: max(&|r| (r.mass - first.mass).abs()),
        max_momentum_drift: max(&|r| r.momentum_drift.abs()),
        max_energy_residual: max(&|r| r.energy_residual.abs()),
        max_emod_offset: max(&|r| r.emod_offset.abs()),
        min_decay_margin: records
            .iter()
            .map(|r| (r.dissipation - r.lambda_theory * r.modulated_energy) / scale)
            .fold(f64::INFINITY, f64::min),
        decay_rate: fit.map(|f| f.rate),
        decay_r_squared: fit.map(|f| f.r_squared),
        tstar,
    })
}

impl DiagSummary {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| x.to_string());
        let rows = [
            ("samples", self.samples.to_string()),
            ("t_end", self.t_end.to_string()),
            ("energy_initial", self.energy_initial.to_string()),
            ("energy_final", self.energy_final.to_string()),
            ("modulated_initial", self.modulated_initial.to_string()),
            ("modulated_final", self.modulated_final.to_string()),
            ("max_mass_drift", self.max_mass_drift.to_string()),
            ("max_momentum_drift", self.max_momentum_drift.to_string()),
            ("max_energy_residual", self.max_energy_residual.to_string()),
            ("max_emod_offset", self.max_emod_offset.to_string()),
            ("min_decay_margin", self.min_decay_margin.to_string()),
            ("decay_rate", opt(self.decay_rate)),
            ("decay_r_squared", opt(self.decay_r_squared)),
            ("tstar", self.tstar.to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Summarize `run_dir/series.csv` into `out` (summary text and charts).
pub fn diag_command(run_dir: &Path, out: &Path) -> Result<DiagSummary> {
    let text = fs::read_to_string(run_dir.join(SERIES_FILE))?;
    let (_, records) = read_series(&text)?;
    let summary = summarize(&records)?;
    fs::create_dir_all(out)?;
    write_atomic(&out.join(DIAG_FILE), summary.to_text().as_bytes())?;
    for (name, svg) in run_charts(&records) {
        write_atomic(&out.join(name), svg.as_bytes())?;
    }
    Ok(summary)
}

/// Density grid as CSV with columns `x1..xd,rho`.
pub fn grid_csv(rho: &ScalarGrid) -> String {
    let d = rho.spec.d();
    let mut out: String = (1..=d).map(|a| format!("x{a},")).collect();
    out.push_str("rho\n");
    for (i, value) in rho.values.iter().enumerate() {
        let node = rho.spec.node(i);
        for x in &node[..d] {
            let _ = write!(out, "{x:.17e},");
        }
        let _ = writeln!(out, "{value:.17e}");
    }
    out
}

/// Particles observed in the frame drifting at `drift`, at time `t`.
pub fn drifting_frame(particles: &ParticleEnsemble, t: f64, drift: &[f64]) -> Result<ParticleEnsemble> {
    let d = particles.dim();
    let x = particles.positions().chunks_exact(d).flat_map(|p| (0..d).map(move |a| p[a] - t * drift[a])).collect();
    let mut out = ParticleEnsemble::new(d, x, particles.velocities().to_vec(), particles.weights().to_vec())?;
    out.meta = particles.meta.clone();
    Ok(out)
}

/// Outcome of the asymptotic-profile computation.
#[derive(Clone, Debug)]
pub struct ProfileSummary {
    pub t_end: f64,
    pub drift: Vec<f64>,
    /// `2 int_0^T |grad u|_inf`, the Picard contraction constant.
    pub contraction: f64,
    /// Ratio `E_mod(T) / E_mod(0)` justifying the drift-only tail.
    pub tail_ratio: f64,
    pub tail_justified: bool,
    /// Exact W1 between the deposited renormalized density at `T` and the pushforward profile.
    pub w1_final: f64,
    /// `C int_T^inf E_mod^{1/2}` with the tail from the exponential fit.
    pub w1_bound: f64,
    pub mass_pushforward: f64,
    /// Mass of the profile formula, when the family has a density.
    pub mass_formula: Option<f64>,
    pub picard_iterations: usize,
    pub picard_residual: f64,
    pub max_d_x: f64,
    pub max_scaled_d_v: f64,
    pub min_det_a: f64,
}

impl ProfileSummary {
    pub fn to_text(&self) -> String {
        let list = self.drift.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("t_end", self.t_end.to_string());
        put("drift", list);
        put("contraction", self.contraction.to_string());
        put("tail_ratio", self.tail_ratio.to_string());
        put("tail_justified", self.tail_justified.to_string());
        put("w1_final", self.w1_final.to_string());
        put("w1_bound", self.w1_bound.to_string());
        put("bound_holds", (self.w1_final <= self.w1_bound).to_string());
        put("mass_pushforward", self.mass_pushforward.to_string());
        put("mass_formula", self.mass_formula.map_or("n/a".into(), |m| m.to_string()));
        put("picard_iterations", self.picard_iterations.to_string());
        put("picard_residual", self.picard_residual.to_string());
        put("max_d_x", self.max_d_x.to_string());
        put("max_scaled_d_v", self.max_scaled_d_v.to_string());
        put("min_det_a", self.min_det_a.to_string());
        out
    }
}

/// `C int_T^inf E^{1/2}`: trapezoid over the samples after `t`, plus an exponential tail
/// fitted on the second half of the series.
pub fn asymptotic_bound(records: &[DiagnosticsRecord], t: f64) -> Result<f64> {
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.modulated_energy.max(0.0))).collect();
    let t_end = series.last().map_or(0.0, |p| p.0);
    let measured = jabin_cauchy_bound(&series)?.between(t, t_end);
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= 0.5 * t_end && p.1 > 0.0).collect();
    let fit = fit_decay_rate(&window)?;
    let tail = if fit.rate > 0.0 { exponential_tail(fit.intercept.exp(), fit.rate, t_end) } else { f64::INFINITY };
    Ok(ASYMPTOTIC_BOUND_CONSTANT * (measured + tail))
}

fn list_snapshots(run_dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(run_dir.join(SNAPSHOT_DIR))? {
        let path = entry?.path();
        let step = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("u_"))
            .and_then(|s| s.parse::<u64>().ok());
        if let Some(step) = step {
            out.push((step, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Velocity history of a stored run, from its snapshots.
pub fn load_history(run_dir: &Path, config: &RunConfig, drift: Vec<f64>) -> Result<VelocityHistory> {
    let snaps = list_snapshots(run_dir)?;
    if snaps.len() < 2 || snaps[0].0 != 0 {
        return Err(Error::Format("profile needs snapshots from step 0 onward (io.snapshot_stride > 0)".into()));
    }
    let stride = config.profile.snapshot_step;
    let last = snaps.len() - 1;
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for (k, (step, path)) in snaps.iter().enumerate() {
        if k % stride == 0 || k == last {
            let mut r = std::io::BufReader::new(fs::File::open(path)?);
            fields.push(read_field(&mut r)?);
            times.push(*step as f64 * config.time.dt);
        }
    }
    VelocityHistory::with_evaluation(times, fields, drift, SpatialEval::Cic { refine: config.profile.refine })
}

/// Compute the asymptotic profile of a stored run and compare it with the final state.
pub fn profile_command(run_dir: &Path, out: &Path) -> Result<ProfileSummary> {
    let started = Instant::now();
    let config = parse_config(&fs::read_to_string(run_dir.join(CONFIG_FILE))?)?;
    let ckpt = load_checkpoint(&run_dir.join(CHECKPOINT_FILE))?;
    let initial = config.initial_state()?;
    let drift = initial.limit_velocity();
    let spec = config.grid_spec()?;
    let mut history = load_history(run_dir, &config, drift.clone())?;
    let records = &ckpt.records;
    let e0 = records.first().map_or(0.0, |r| r.modulated_energy);
    let tail_ratio = records.last().map_or(0.0, |r| r.modulated_energy) / if e0 > 0.0 { e0 } else { 1.0 };
    history.set_tail_energy_ratio(tail_ratio);
    let contraction = contraction_constant(&history)?;
    let picard = PicardOptions { tol: config.profile.tol, ..PicardOptions::default() };
    let opts =
        ProfileOptions { velocity_nodes: config.profile.velocity_nodes, h: config.profile.h, picard, s_grid: None };

    let push = rho_infinity_pushforward(&history, &initial.particles, &spec, &opts)?;
    let t_end = ckpt.state.t;
    let observed = deposit(&drifting_frame(&ckpt.state.particles, t_end, &drift)?, &spec).rho;
    let w1_final = w1_exact(&Histogram::from_grid(&observed)?, &Histogram::from_grid(&push.density)?)?;
    let w1_bound = asymptotic_bound(records, t_end)?;

    let formula = match config.init.velocity {
        VelocityFamily::Monokinetic => None,
        _ => Some(rho_infinity(&history, &config.initial_data(), &spec, &opts)?),
    };

    // certificates on a spread of initial particles
    let s_grid = history.times().to_vec();
    let samples = 32.min(initial.particles.len());
    let step = (initial.particles.len() / samples.max(1)).max(1);
    let (mut max_d_x, mut max_scaled_d_v, mut min_det_a) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut picard_iterations = push.picard_iters;
    let mut picard_residual = push.residual;
    for p in (0..initial.particles.len()).step_by(step).take(samples) {
        let limit = crate::asymptotics::limit_position(
            &history,
            &s_grid,
            initial.particles.position(p),
            initial.particles.velocity(p),
            &picard,
        )?;
        let report =
            jacobian_a(&history, &s_grid, &limit.x[..spec.d()], initial.particles.velocity(p), opts.h, &picard)?;
        max_d_x = max_d_x.max(report.max_d_x);
        max_scaled_d_v = max_scaled_d_v.max(report.max_scaled_d_v);
        min_det_a = min_det_a.min(report.det_abs);
        picard_iterations = picard_iterations.max(report.max_iterations);
        picard_residual = picard_residual.max(report.max_residual);
    }

    fs::create_dir_all(out)?;
    write_atomic(&out.join("rho_inf_pushforward.csv"), grid_csv(&push.density).as_bytes())?;
    write_atomic(&out.join("rho_bar_final.csv"), grid_csv(&observed).as_bytes())?;
    if let Some(f) = &formula {
        write_atomic(&out.join("rho_inf.csv"), grid_csv(&f.rho_inf).as_bytes())?;
    }
    let summary = ProfileSummary {
        t_end,
        drift,
        contraction,
        tail_ratio,
        tail_justified: history.tail_justified(),
        w1_final,
        w1_bound,
        mass_pushforward: push.density.integral(),
        mass_formula: formula.as_ref().map(|f| f.mass),
        picard_iterations,
        picard_residual,
        max_d_x,
        max_scaled_d_v,
        min_det_a,
    };
    let mut text = summary.to_text();
    let _ = writeln!(text, "elapsed_seconds = {:.3}", started.elapsed().as_secs_f64());
    write_atomic(&out.join(PROFILE_FILE), text.as_bytes())?;
    Ok(summary)
}
