//! Return-panel CSV and the flat binary moment layout.
//!
//! The binary layout is a little-endian `u64` asset count `N` followed by
//! little-endian `f64` values: `μ` (N), `Σ` row-major (N²), the `Φ` blocks
//! (N³) and the `Ψ` blocks (N⁴).

use std::io::{BufReader, BufWriter, Read, Write};

use nalgebra::{DMatrix, DVector};

use super::{MomentSet, ReturnsMatrix};
use crate::error::{Error, Result};

/// Reads a returns panel: a header row of tickers, then one row of simple
/// returns per period.
pub fn read_returns_csv<R: Read>(reader: R) -> Result<ReturnsMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let tickers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(&e, 1, 0))?
        .iter()
        .map(str::to_owned)
        .collect();
    let n = tickers.len();
    if n == 0 || tickers.iter().all(String::is_empty) {
        return Err(Error::Csv {
            line: 1,
            column: 1,
            message: "missing ticker header".into(),
        });
    }

    let mut values = Vec::new();
    let mut n_obs = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e, n_obs as u64 + 2, 0))?;
        let line = record.position().map_or(n_obs as u64 + 2, |p| p.line());
        if record.len() != n {
            return Err(Error::Csv {
                line,
                column: record.len().min(n) + 1,
                message: format!("expected {n} fields, found {}", record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                line,
                column: col + 1,
                message: format!("non-numeric value {field:?} for ticker {}", tickers[col]),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    column: col + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            values.push(v);
        }
        n_obs += 1;
    }
    if n_obs < 2 {
        return Err(Error::TooFewObservations(n_obs));
    }
    let data = DMatrix::from_row_slice(n_obs, n, &values);
    ReturnsMatrix::new(data, tickers)
}

fn csv_error(e: &csv::Error, line: u64, column: usize) -> Error {
    let line = e.position().map_or(line, |p| p.line());
    Error::Csv {
        line,
        column,
        message: e.to_string(),
    }
}

/// Writes a returns panel as CSV with `.` decimals, `,` separators and LF
/// line endings. Values use the shortest round-trip representation.
pub fn write_returns_csv<W: Write>(r: &ReturnsMatrix, writer: W) -> Result<()> {
    let mut out = BufWriter::new(writer);
    writeln!(out, "{}", r.tickers().join(","))?;
    let data = r.data();
    for t in 0..data.nrows() {
        let row: Vec<String> = data.row(t).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_moments<W: Write>(m: &MomentSet, writer: W) -> Result<()> {
    let mut out = BufWriter::new(writer);
    out.write_all(&(m.n_assets() as u64).to_le_bytes())?;
    for v in m.mu().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    let sigma = m.sigma();
    for i in 0..m.n_assets() {
        for j in 0..m.n_assets() {
            out.write_all(&sigma[(i, j)].to_le_bytes())?;
        }
    }
    for v in m.phi().iter().chain(m.psi()) {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a moment set, refusing asset counts above `max_assets` before
/// allocating the tensors.
pub fn read_moments<R: Read>(reader: R, max_assets: usize) -> Result<MomentSet> {
    let mut input = BufReader::new(reader);
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word);
    let n = usize::try_from(n).map_err(|_| Error::Data(format!("asset count {n} too large")))?;
    if n == 0 {
        return Err(Error::Data("moment file declares zero assets".into()));
    }
    super::check_asset_cap(n, max_assets)?;

    let mut read_vec = |len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut word)?;
            out.push(f64::from_le_bytes(word));
        }
        Ok(out)
    };
    let mu = DVector::from_vec(read_vec(n)?);
    let sigma = DMatrix::from_row_slice(n, n, &read_vec(n * n)?);
    let phi = read_vec(n * n * n)?;
    let psi = read_vec(n * n * n * n)?;
    MomentSet::from_parts(mu, sigma, phi, psi)
}
