//! Binary and CSV serialization of Fourier fields.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `VNSF` |
//! | 4     | format version (u32) |
//! | 4     | endianness tag `0x01020304` (u32) |
//! | 4     | d (u32) |
//! | 4     | n (u32) |
//! | 1     | div_free flag (0 or 1) |
//! | ...   | for each mode in row-major FFT order, for each component: re, im (f64) |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{FourierField, GridSpec};
use crate::error::{Error, Result};

pub const FIELD_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"VNSF";
const ENDIAN_TAG: u32 = 0x0102_0304;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn write_field(w: &mut impl Write, field: &FourierField) -> Result<()> {
    let spec = field.spec();
    w.write_all(MAGIC)?;
    w.write_all(&FIELD_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&ENDIAN_TAG.to_le_bytes())?;
    w.write_all(&(spec.d() as u32).to_le_bytes())?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(field.is_div_free())])?;
    let mut buf = Vec::with_capacity(spec.len() * spec.d() * 16);
    for i in 0..spec.len() {
        for c in field.components() {
            buf.extend_from_slice(&c[i].re.to_le_bytes());
            buf.extend_from_slice(&c[i].im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<FourierField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != FIELD_FORMAT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: FIELD_FORMAT_VERSION });
    }
    if read_u32(r)? != ENDIAN_TAG {
        return Err(Error::Format("unexpected endianness tag".into()));
    }
    let d = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    let spec = GridSpec::new(d, n).map_err(|e| Error::Format(e.to_string()))?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); spec.len()]; d];
    for i in 0..spec.len() {
        for c in comps.iter_mut() {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            c[i] = Complex64::new(re, im);
        }
    }
    FourierField::from_coeffs(spec, comps, flag[0] == 1)
}

/// Physical samples as CSV with columns `x1,..,xd,u1,..,ud`.
pub fn write_field_csv(w: &mut impl Write, field: &FourierField) -> Result<()> {
    let spec = field.spec();
    let d = spec.d();
    let phys = field.to_physical();
    let header: Vec<String> = (1..=d).map(|a| format!("x{a}")).chain((1..=d).map(|a| format!("u{a}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..spec.len() {
        let x = spec.node(i);
        let row: Vec<String> =
            x[..d].iter().copied().chain(phys.comps.iter().map(|c| c[i])).map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
