//! Diagnostics series as CSV.
//!
//! One header line from [`DiagnosticsRecord::csv_header`] followed by one row per record.
//! Floats are written with 17 fractional digits in scientific notation, enough to read
//! every value back bit for bit.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

/// The CSV text of a series; header only when `records` is empty.
pub fn series_csv(records: &[DiagnosticsRecord], d: usize) -> String {
    let mut out = DiagnosticsRecord::csv_header(d);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Spatial dimension implied by a header line (number of `mean_u` columns).
pub fn series_dim(header: &str) -> Result<usize> {
    let d = header.split(',').filter(|c| c.trim().starts_with("mean_u")).count();
    if (2..=3).contains(&d) && header.trim() == DiagnosticsRecord::csv_header(d) {
        Ok(d)
    } else {
        Err(Error::Format("unrecognized series header".into()))
    }
}

/// Parse text written by [`series_csv`] for dimension `d`.
pub fn parse_series(text: &str, d: usize) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty series".into()))?;
    if header.trim() != DiagnosticsRecord::csv_header(d) {
        return Err(Error::Format("series header does not match the dimension".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            DiagnosticsRecord::from_csv_row(l, d)
                .ok_or_else(|| Error::Format(format!("malformed series row {}", i + 2)))
        })
        .collect()
}

/// Parse a series whose dimension is read from the header.
pub fn read_series(text: &str) -> Result<(usize, Vec<DiagnosticsRecord>)> {
    let header = text.lines().next().ok_or_else(|| Error::Format("empty series".into()))?;
    let d = series_dim(header)?;
    Ok((d, parse_series(text, d)?))
}
