//! File formats: data tables, matrix and mask CSV, solution JSON and flat
//! `key = value` configuration files.
//!
//! All floats are written with 17 significant digits so that a write/read
//! round trip is bit-exact. Line endings are LF.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::sdp::SdpSolution;
use crate::synth::{DataTable, Mask};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(cell: &str, row: usize, col: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}, column {col}: cannot parse {cell:?} as a number")))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

/// Reads a table whose first row is a header. Empty cells and `NA` are
/// missing.
pub fn read_table<R: Read>(r: R) -> Result<DataTable> {
    let mut rdr = reader(r);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::Parse("table header is empty".into()));
    }
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| match cell {
                "" | "NA" => Ok(None),
                other => parse_f64(other, r + 1, c + 1).map(Some),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(DataTable { headers, rows })
}

fn index_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("c{j}")).collect()
}

pub fn write_matrix_csv<W: Write>(w: W, m: &SymMatrix) -> Result<()> {
    let d = m.dim();
    let mut wtr = writer(w);
    wtr.write_record(index_header(d))?;
    for i in 0..d {
        wtr.write_record(m.row(i).iter().map(|&x| fmt_f64(x)))?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_square<R: Read, T>(r: R, cell: impl Fn(&str, usize, usize) -> Result<T>) -> Result<(usize, Vec<T>)> {
    let mut rdr = reader(r);
    let d = rdr.headers()?.len();
    let mut data = Vec::with_capacity(d * d);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != d {
            return Err(Error::Parse(format!("row {} has {} cells, expected {d}", rows + 1, rec.len())));
        }
        for (c, v) in rec.iter().enumerate() {
            data.push(cell(v, rows + 1, c + 1)?);
        }
        rows += 1;
    }
    if rows != d {
        return Err(Error::Parse(format!("expected {d} rows, found {rows}")));
    }
    Ok((d, data))
}

pub fn read_matrix_csv<R: Read>(r: R) -> Result<SymMatrix> {
    let (d, data) = read_square(r, parse_f64)?;
    SymMatrix::from_row_major(d, data)
}

pub fn write_mask_csv<W: Write>(w: W, mask: &Mask) -> Result<()> {
    let d = mask.dim();
    let mut wtr = writer(w);
    wtr.write_record(index_header(d))?;
    for i in 0..d {
        wtr.write_record((0..d).map(|j| if mask.get(i, j) { "1" } else { "0" }))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_mask_csv<R: Read>(r: R) -> Result<Mask> {
    let (d, bits) = read_square(r, |v, row, col| match v {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::Parse(format!("row {row}, column {col}: mask cells must be 0 or 1"))),
    })?;
    let mut mask = Mask::new(d, false);
    for i in 0..d {
        for j in 0..d {
            if bits[i * d + j] != bits[j * d + i] {
                return Err(Error::Parse(format!("mask is not symmetric at ({}, {})", i + 1, j + 1)));
            }
            if bits[i * d + j] {
                mask.set(i, j, true);
            }
        }
    }
    Ok(mask)
}

/// JSON view of a solver result. Support indices are 1-based.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionExport {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub support: Vec<usize>,
    pub diag: Vec<f64>,
}

impl From<&SdpSolution> for SolutionExport {
    fn from(s: &SdpSolution) -> Self {
        Self {
            objective: s.objective,
            iterations: s.iterations,
            converged: s.converged,
            support: s.support.iter().map(|i| i + 1).collect(),
            diag: s.diag(),
        }
    }
}

/// Flat `key = value` configuration. Blank lines and lines starting with
/// `#` are ignored; a repeated key is an error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(k.to_owned(), v.trim().to_owned()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Parses a scalar value.
    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parse(format!("key {key:?}: cannot parse {v:?}")))
            })
            .transpose()
    }

    /// Parses a comma-separated list.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<T>()
                            .map_err(|_| Error::Parse(format!("key {key:?}: cannot parse list item {x:?}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = SymMatrix::from_upper_fn(4, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0) - 0.1).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 5);
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn mask_round_trip() {
        let mut mask = Mask::new(3, false);
        mask.set(0, 2, true);
        mask.set(1, 1, true);
        let mut buf = Vec::new();
        write_mask_csv(&mut buf, &mask).unwrap();
        assert_eq!(read_mask_csv(buf.as_slice()).unwrap(), mask);
    }

    #[test]
    fn asymmetric_inputs_rejected() {
        assert!(read_matrix_csv("a,b\n1,2\n3,4\n".as_bytes()).is_err());
        assert!(read_mask_csv("a,b\n1,1\n0,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn table_missing_cells() {
        let t = read_table("x,y,z\n1,NA,3\n,2.5,-1e-3\n".as_bytes()).unwrap();
        assert_eq!(t.headers, ["x", "y", "z"]);
        assert_eq!(t.rows[0], [Some(1.0), None, Some(3.0)]);
        assert_eq!(t.rows[1], [None, Some(2.5), Some(-1e-3)]);
        assert!(matches!(read_table("x\nfoo\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn kv_config() {
        let c = KvConfig::parse("# comment\nd = 20, 50\nrho=0.1\n\ntrials = 3\n").unwrap();
        assert_eq!(c.get_list::<usize>("d").unwrap(), Some(vec![20, 50]));
        assert_eq!(c.get_parsed::<f64>("rho").unwrap(), Some(0.1));
        assert_eq!(c.get_parsed::<u32>("missing").unwrap(), None);
        assert!(c.get_parsed::<u32>("rho").is_err());
        assert!(KvConfig::parse("a = 1\na = 2").is_err());
        assert!(KvConfig::parse("novalue").is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
