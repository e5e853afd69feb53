// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON readers and writers for the artifact formats.
//!
//! Numbers are written in Rust's shortest round-trip form, so a value read
//! back is bit-identical to the one written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::types::{CanonicalSystem, GLFunction, GridFunction1D};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes a header line and one comma-separated row per item.
pub fn write_columns<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header line, checking the column count.
pub fn read_columns(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(format!("{}: {e}", path.display())),
        _ => csv_err(e),
    })?;
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != columns {
            return Err(Error::Parse(format!(
                "{}: row {} has {} columns, expected {columns}",
                path.display(),
                line + 2,
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("{}: row {}: {e}", path.display(), line + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn uniform_range(xs: &[f64], what: &str) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Parse(format!("{what}: need at least two rows")));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let h = (hi - lo) / (xs.len() - 1) as f64;
    let bad = xs
        .iter()
        .enumerate()
        .any(|(i, &x)| (x - (lo + i as f64 * h)).abs() > 1e-9 * (hi - lo).abs().max(1.0));
    if bad || !(h > 0.0) {
        return Err(Error::Parse(format!("{what}: abscissae are not uniform and increasing")));
    }
    Ok((lo, hi))
}

/// `t, re, im` rows.
pub fn write_grid_csv(path: &Path, g: &GridFunction1D) -> Result<()> {
    write_columns(
        path,
        &["t", "re", "im"],
        g.nodes().zip(g.samples()).map(|(t, v)| vec![t, v.re, v.im]),
    )
}

pub fn read_grid_csv(path: &Path) -> Result<GridFunction1D> {
    let rows = read_columns(path, 3)?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (lo, hi) = uniform_range(&xs, &path.display().to_string())?;
    GridFunction1D::new(lo, hi, rows.iter().map(|r| Complex64::new(r[1], r[2])).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct GlHeader {
    #[serde(rename = "N")]
    n: f64,
    samples: usize,
}

/// Sibling path holding the JSON header of a GL function CSV.
pub fn gl_header_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `x, re, im` rows plus the `{"N", "samples"}` header next to them.
pub fn write_gl_function(csv_path: &Path, phi: &GLFunction) -> Result<()> {
    write_columns(
        csv_path,
        &["x", "re", "im"],
        phi.grid().nodes().zip(phi.samples()).map(|(x, v)| vec![x, v.re, v.im]),
    )?;
    write_json(&gl_header_path(csv_path), &GlHeader { n: phi.n(), samples: phi.len() })
}

/// Reads a GL function. Without a header file `N` is taken from the range.
pub fn read_gl_function(csv_path: &Path) -> Result<GLFunction> {
    let rows = read_columns(csv_path, 3)?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (lo, hi) = uniform_range(&xs, &csv_path.display().to_string())?;
    let header = gl_header_path(csv_path);
    let n = if header.exists() {
        let h: GlHeader = read_json(&header)?;
        if h.samples != rows.len() {
            return Err(Error::Parse(format!(
                "header says {} samples, file has {}",
                h.samples,
                rows.len()
            )));
        }
        h.n
    } else {
        0.25 * (hi - lo)
    };
    if (lo + 2.0 * n).abs() > 1e-9 * n || (hi - 2.0 * n).abs() > 1e-9 * n {
        return Err(Error::Parse(format!("GL grid [{lo}, {hi}] is not [−2N, 2N] for N = {n}")));
    }
    GLFunction::new(n, rows.iter().map(|r| Complex64::new(r[1], r[2])).collect())
}

/// `x, h11, h12, h22` rows.
pub fn write_canonical_csv(path: &Path, h: &CanonicalSystem) -> Result<()> {
    write_columns(
        path,
        &["x", "h11", "h12", "h22"],
        h.samples().iter().enumerate().map(|(i, s)| vec![h.x(i), s[0], s[1], s[2]]),
    )
}

pub fn read_canonical_csv(path: &Path, tol: &Tolerances) -> Result<CanonicalSystem> {
    let rows = read_columns(path, 4)?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (lo, hi) = uniform_range(&xs, &path.display().to_string())?;
    if lo.abs() > 1e-12 {
        return Err(Error::Parse(format!("canonical system grid must start at 0, got {lo}")));
    }
    CanonicalSystem::new(hi, rows.iter().map(|r| [r[1], r[2], r[3]]).collect(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("phi.csv");
        let phi =
            GLFunction::from_fn(1.5, 31, |x| Complex64::new((0.3 * x).cos() / 7.0, 0.1 * x.sin()))
                .unwrap();
        write_gl_function(&p, &phi).unwrap();
        let back = read_gl_function(&p).unwrap();
        assert_eq!(back.samples(), phi.samples());
        assert_eq!(back.n(), 1.5);
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        let tol = Tolerances::default();
        let h = CanonicalSystem::new(1.0, vec![[1.0, 0.0, 1.0], [2.0, 0.5, 0.625]], &tol).unwrap();
        write_canonical_csv(&p, &h).unwrap();
        assert_eq!(read_canonical_csv(&p, &tol).unwrap(), h);
    }

    #[test]
    fn malformed_csv_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "t,re,im\n0,1,x\n1,2,3\n").unwrap();
        assert!(matches!(read_grid_csv(&p), Err(Error::Parse(_))));
        assert!(matches!(read_grid_csv(&dir.path().join("none.csv")), Err(Error::Io(_))));
    }
}
