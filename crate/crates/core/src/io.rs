//! Plain-text artifacts: grid fields, disks, spectra and structure tables
//! as CSV, reports as JSON.
//!
//! A field file starts with `#` metadata lines (`n`, `h`, `lo`, `shape`),
//! then a header row of coordinate names and `value`, then one row per node
//! with a finite value. Numbers use the shortest decimal form that reads back
//! to the same bits, so export followed by import is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::disks::Disk;
use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};
use crate::geometry::StructureTable;
use crate::operator::SpectrumRow;

/// Coordinate column names `x1, y1, ..., xn, yn`.
pub fn coordinate_names(n: usize) -> Vec<String> {
    (1..=n).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Field as CSV text.
pub fn field_to_csv(u: &ScalarField) -> String {
    let g = u.grid();
    let mut s = String::new();
    let _ = writeln!(s, "# n={}", g.n());
    let _ = writeln!(s, "# h={}", g.h());
    let _ = writeln!(s, "# lo={}", join(g.lo()));
    let shape: Vec<String> = g.shape().iter().map(|k| k.to_string()).collect();
    let _ = writeln!(s, "# shape={}", shape.join(","));
    let _ = writeln!(s, "{},value", coordinate_names(g.n()).join(","));
    let mut p = vec![0.0; g.dim()];
    for (i, &v) in u.values().iter().enumerate() {
        if v.is_finite() {
            g.point_into(i, &mut p);
            let _ = writeln!(s, "{},{}", join(&p), v);
        }
    }
    s
}

pub fn export_field(u: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, field_to_csv(u))?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| parse_err(line, format!("bad number '{}'", t.trim()))))
        .collect()
}

/// Parse CSV text; when `expected` is given the file's grid must match it.
pub fn field_from_csv(text: &str, expected: Option<&Grid>) -> Result<ScalarField> {
    let mut n = None;
    let mut h = None;
    let mut lo = None;
    let mut shape = None;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut header = None;
    for (ln, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(meta) = line.strip_prefix('#') else {
            header = Some((ln, line.to_string()));
            break;
        };
        let Some((key, value)) = meta.trim().split_once('=') else {
            continue;
        };
        match key.trim() {
            "n" => n = Some(value.trim().parse::<usize>().map_err(|_| parse_err(ln, "bad n"))?),
            "h" => h = Some(value.trim().parse::<f64>().map_err(|_| parse_err(ln, "bad h"))?),
            "lo" => lo = Some(parse_list::<f64>(value, ln)?),
            "shape" => shape = Some(parse_list::<usize>(value, ln)?),
            _ => {}
        }
    }
    let (Some(n), Some(h), Some(lo), Some(shape)) = (n, h, lo, shape) else {
        return Err(parse_err(1, "missing grid metadata (n, h, lo, shape)"));
    };
    let grid = Grid::new(n, h, lo, shape).map_err(|e| parse_err(1, e.to_string()))?;
    if let Some(e) = expected {
        if !grid.same_as(e) {
            return Err(Error::GridMismatch(format!(
                "file grid (h = {}, shape {:?}) differs from expected (h = {}, shape {:?})",
                grid.h(),
                grid.shape(),
                e.h(),
                e.shape()
            )));
        }
    }
    let d = grid.dim();
    let (hl, header) = header.ok_or_else(|| parse_err(1, "missing header row"))?;
    let mut want = coordinate_names(n);
    want.push("value".into());
    let got: Vec<String> = header.split(',').map(|t| t.trim().to_string()).collect();
    if got != want {
        return Err(parse_err(hl, format!("expected header '{}'", want.join(","))));
    }
    let mut values = vec![f64::NAN; grid.len()];
    for (ln, line) in lines {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let row: Vec<f64> = parse_list(line, ln)?;
        if row.len() != d + 1 {
            return Err(parse_err(ln, format!("expected {} columns, found {}", d + 1, row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(ln, "non-finite value"));
        }
        let idx = grid
            .locate(&row[..d])
            .ok_or_else(|| Error::GridMismatch(format!("line {ln}: point {:?} is not a grid node", &row[..d])))?;
        values[idx] = row[d];
    }
    ScalarField::new(Arc::new(grid), values)
}

pub fn import_field(path: &Path, expected: Option<&Grid>) -> Result<ScalarField> {
    field_from_csv(&fs::read_to_string(path)?, expected)
}

/// Disk samples: parameter `w` and image point per row.
pub fn disk_to_csv(disk: &Disk, radial: usize, angles: usize) -> String {
    let n = disk.center.len() / 2;
    let mut s = format!("re_w,im_w,{}\n", coordinate_names(n).join(","));
    for (w, p) in disk.samples(radial, angles) {
        let _ = writeln!(s, "{},{},{}", w.re, w.im, join(&p));
    }
    s
}

/// One row per node with the eigenvalues of `A(u)` in increasing order.
pub fn spectra_to_csv(rows: &[SpectrumRow], n: usize) -> String {
    let names: Vec<String> = (1..=n).map(|k| format!("lambda{k}")).collect();
    let mut s = format!("{},{}\n", coordinate_names(n).join(","), names.join(","));
    for r in rows {
        let _ = writeln!(s, "{},{}", join(&r.point), join(&r.eigenvalues));
    }
    s
}

/// Structure table: coordinates, then the `2n x 2n` matrix of `J` row by row.
pub fn structure_table_from_csv(text: &str, n: usize) -> Result<StructureTable> {
    let d = 2 * n;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !header_seen && t.chars().next().is_some_and(|c| c.is_alphabetic()) {
            header_seen = true;
            continue;
        }
        let v: Vec<f64> = parse_list(t, ln)?;
        if v.len() != d + d * d {
            return Err(parse_err(ln, format!("expected {} columns, found {}", d + d * d, v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(ln, "non-finite value"));
        }
        rows.push((v[..d].to_vec(), DMatrix::from_row_slice(d, d, &v[d..])));
    }
    StructureTable::new(n, rows)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn field() -> ScalarField {
        let g = Arc::new(Grid::covering(1, &BoundingBox::cube(2, 1.0), 0.25).unwrap());
        let mut u = ScalarField::from_fn(g, &|p: &[f64]| (p[0] * 3.0).sin() / 7.0 + p[1]);
        u.values_mut()[0] = f64::NAN;
        u.values_mut()[1] = -0.0;
        u
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let u = field();
        let v = field_from_csv(&field_to_csv(&u), Some(u.grid())).unwrap();
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn import_errors() {
        let u = field();
        let text = field_to_csv(&u);
        let other = Grid::covering(1, &BoundingBox::cube(2, 1.0), 0.125).unwrap();
        assert!(matches!(field_from_csv(&text, Some(&other)), Err(Error::GridMismatch(_))));
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let cut = lines[6].rfind(',').unwrap();
        lines[6] = format!("{},NaN", &lines[6][..cut]);
        let bad = lines.join("\n");
        match field_from_csv(&bad, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(field_from_csv("x1,y1,value\n", None), Err(Error::Parse { .. })));
    }

    #[test]
    fn structure_table_parses() {
        let mut s = String::from("x1,y1,j00,j01,j10,j11\n");
        for p in [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]] {
            s.push_str(&format!("{},{},0,-1,1,0\n", p[0], p[1]));
        }
        let t = structure_table_from_csv(&s, 1).unwrap();
        assert_eq!(t.n(), 1);
        assert!(matches!(structure_table_from_csv("1,2,3\n", 1), Err(Error::Parse { line: 1, .. })));
    }
}
