//! Ensemble checkpoint format and CSV subsampling.
//!
//! Binary layout (little-endian): magic `VNSP`, version (u32), N (u64), d (u32),
//! q (f64), v_max (f64), seed (u64), tail mass (f64), then the packed arrays
//! `x` (N*d f64), `v` (N*d f64), `w` (N f64).

use std::io::{Read, Write};

use super::{EnsembleMeta, ParticleEnsemble};
use crate::error::{Error, Result};

pub const ENSEMBLE_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"VNSP";

fn put_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn get_bytes<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn get_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

pub fn write_ensemble(w: &mut impl Write, ens: &ParticleEnsemble) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&ENSEMBLE_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ens.len() as u64).to_le_bytes())?;
    w.write_all(&(ens.dim() as u32).to_le_bytes())?;
    w.write_all(&ens.meta.q.to_le_bytes())?;
    w.write_all(&ens.meta.v_max.to_le_bytes())?;
    w.write_all(&ens.meta.seed.to_le_bytes())?;
    w.write_all(&ens.meta.tail_mass.to_le_bytes())?;
    put_f64s(w, &ens.x)?;
    put_f64s(w, &ens.v)?;
    put_f64s(w, &ens.w)?;
    Ok(())
}

pub fn read_ensemble(r: &mut impl Read) -> Result<ParticleEnsemble> {
    if &get_bytes::<4>(r)? != MAGIC {
        return Err(Error::Format("not an ensemble file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(get_bytes(r)?);
    if version != ENSEMBLE_FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: ENSEMBLE_FORMAT_VERSION });
    }
    let n = u64::from_le_bytes(get_bytes(r)?) as usize;
    let d = u32::from_le_bytes(get_bytes(r)?) as usize;
    if !(1..=3).contains(&d) {
        return Err(Error::Format(format!("ensemble dimension {d} out of range")));
    }
    let meta = EnsembleMeta {
        q: f64::from_le_bytes(get_bytes(r)?),
        v_max: f64::from_le_bytes(get_bytes(r)?),
        seed: u64::from_le_bytes(get_bytes(r)?),
        tail_mass: f64::from_le_bytes(get_bytes(r)?),
    };
    let x = get_f64s(r, n * d)?;
    let v = get_f64s(r, n * d)?;
    let w = get_f64s(r, n)?;
    // positions are stored already wrapped; bypass the constructor to keep bits intact
    Ok(ParticleEnsemble { d, x, v, w, meta })
}

/// Every `stride`-th particle as CSV with columns `x1..xd,v1..vd,w`.
pub fn write_subsample_csv(w: &mut impl Write, ens: &ParticleEnsemble, stride: usize) -> Result<()> {
    let d = ens.dim();
    let stride = stride.max(1);
    let header: Vec<String> = (1..=d)
        .map(|a| format!("x{a}"))
        .chain((1..=d).map(|a| format!("v{a}")))
        .chain(std::iter::once("w".to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in (0..ens.len()).step_by(stride) {
        let row: Vec<String> = ens
            .position(i)
            .iter()
            .chain(ens.velocity(i))
            .chain(std::iter::once(&ens.w[i]))
            .map(|v| format!("{v:.17e}"))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
