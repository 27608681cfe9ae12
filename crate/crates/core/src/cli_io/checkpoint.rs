//! Bit-exact checkpoints of a run.
//!
//! Binary layout (little-endian): magic `VNSC`, version (u32), endianness tag (u32),
//! effective configuration (u64 length + UTF-8), step (u64), t, `u0_h_half`,
//! initial energy (f64), flags (2 bytes), conserved momentum (u32 length + f64s),
//! accumulators (13 f64), the field in its own format, the ensemble in its own format,
//! and the series so far as CSV text (u64 length + UTF-8).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::coupling::{Accumulators, PointValues, SimState};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::particles::{read_ensemble, write_ensemble};
use crate::spectral::{read_field, write_field};

use super::series::{parse_series, series_csv};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"VNSC";
const ENDIAN_TAG: u32 = 0x0102_0304;

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_text(w: &mut impl Write, text: &str) -> Result<()> {
    w.write_all(&(text.len() as u64).to_le_bytes())?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get(r)?))
}

fn get_text(r: &mut impl Read) -> Result<String> {
    let len = u64::from_le_bytes(get(r)?) as usize;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Format("truncated text block".into()));
    }
    String::from_utf8(buf).map_err(|_| Error::Format("text block is not UTF-8".into()))
}

fn accumulator_values(acc: &Accumulators) -> [f64; 13] {
    let p = acc.last;
    [
        acc.grad_int_0,
        acc.grad_int_1,
        acc.force_int,
        acc.dissipation_int,
        acc.exp_u_sup_int,
        acc.rho_sup_max,
        acc.j_sup_max,
        p.grad_sup,
        p.force_norm_sq,
        p.dissipation,
        p.u_sup,
        p.rho_sup,
        p.j_sup,
    ]
}

fn accumulators_from(v: [f64; 13]) -> Accumulators {
    Accumulators {
        grad_int_0: v[0],
        grad_int_1: v[1],
        force_int: v[2],
        dissipation_int: v[3],
        exp_u_sup_int: v[4],
        rho_sup_max: v[5],
        j_sup_max: v[6],
        last: PointValues {
            grad_sup: v[7],
            force_norm_sq: v[8],
            dissipation: v[9],
            u_sup: v[10],
            rho_sup: v[11],
            j_sup: v[12],
        },
    }
}

pub fn write_checkpoint(w: &mut impl Write, ckpt: &Checkpoint) -> Result<()> {
    let s = &ckpt.state;
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&ENDIAN_TAG.to_le_bytes())?;
    put_text(w, &ckpt.config_text)?;
    w.write_all(&s.step.to_le_bytes())?;
    put_f64(w, s.t)?;
    put_f64(w, s.u0_h_half)?;
    put_f64(w, s.initial_energy)?;
    w.write_all(&[u8::from(s.strong_existence_ok), u8::from(s.bootstrap_ok)])?;
    w.write_all(&(s.conserved_momentum.len() as u32).to_le_bytes())?;
    for v in &s.conserved_momentum {
        put_f64(w, *v)?;
    }
    for v in accumulator_values(&s.acc) {
        put_f64(w, v)?;
    }
    write_field(w, &s.u)?;
    write_ensemble(w, &s.particles)?;
    put_text(w, &series_csv(&ckpt.records, s.dim()))?;
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Checkpoint> {
    if &get::<4>(r)? != MAGIC {
        return Err(Error::Format("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(get(r)?);
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: CHECKPOINT_FORMAT_VERSION });
    }
    if u32::from_le_bytes(get(r)?) != ENDIAN_TAG {
        return Err(Error::Format("checkpoint endianness tag mismatch".into()));
    }
    let config_text = get_text(r)?;
    let step = u64::from_le_bytes(get(r)?);
    let t = get_f64(r)?;
    let u0_h_half = get_f64(r)?;
    let initial_energy = get_f64(r)?;
    let [strong, boot] = get::<2>(r)?;
    let len = u32::from_le_bytes(get(r)?) as usize;
    if len > 3 {
        return Err(Error::Format(format!("momentum dimension {len} out of range")));
    }
    let conserved_momentum = (0..len).map(|_| get_f64(r)).collect::<Result<Vec<_>>>()?;
    let mut acc = [0.0; 13];
    for slot in &mut acc {
        *slot = get_f64(r)?;
    }
    let u = read_field(r)?;
    let particles = read_ensemble(r)?;
    let records = parse_series(&get_text(r)?, u.dim())?;
    let state = SimState {
        step,
        t,
        u,
        particles,
        acc: accumulators_from(acc),
        strong_existence_ok: strong != 0,
        bootstrap_ok: boot != 0,
        u0_h_half,
        conserved_momentum,
        initial_energy,
    };
    Ok(Checkpoint { config_text, state, records })
}

/// Write to a temporary sibling, then rename over `path`.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        write_checkpoint(&mut w, ckpt)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(fs::File::open(path)?);
    read_checkpoint(&mut r)
}
