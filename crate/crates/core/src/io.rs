//! Signal, field and pyramid files.
//!
//! Text signals hold one value per line; a field is written as `side` rows of
//! `side` comma-separated values. Binary signals are raw little-endian `f64`
//! with a JSON sidecar of the same stem. Pyramids are stored as a directory
//! with an `index.json` and one flat binary array per grid.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dwt::{CoefficientPyramid, Dim, Normalization, Octave, WaveletFilter};
use crate::error::{Error, Result};
use crate::leaders::{LeaderOctave, LeaderPyramid, Neighborhood};
use crate::stats::PValue;

const DTYPE_F64_LE: &str = "f64le";

/// A 1D series or a square row-major field.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Series(Vec<f64>),
    Field { side: usize, values: Vec<f64> },
}

impl Signal {
    pub fn values(&self) -> &[f64] {
        match self {
            Signal::Series(v) => v,
            Signal::Field { values, .. } => values,
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            Signal::Series(_) => Dim::One,
            Signal::Field { .. } => Dim::Two,
        }
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    pub fn field(side: usize, values: Vec<f64>) -> Result<Self> {
        if side * side != values.len() {
            return Err(Error::InvalidInput(format!(
                "field of side {side} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        Ok(Signal::Field { side, values })
    }
}

/// Sidecar header of a raw binary signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub dims: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<usize>,
    pub dtype: String,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    write_bytes(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Sidecar path of a binary file: same stem, `.json` extension.
pub fn header_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Reads a signal, choosing the format from the extension (`.bin` is binary,
/// anything else is text).
pub fn read_signal(path: &Path) -> Result<Signal> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_binary(path),
        _ => read_text(path),
    }
}

fn parse_row(line: &str) -> Option<Vec<f64>> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().ok())
        .collect()
}

/// Text signal. Blank lines and `#` comments are skipped and a non-numeric
/// first line is taken as a column header.
pub fn read_text(path: &Path) -> Result<Signal> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_row(line) {
            Some(r) => rows.push(r),
            None if first => {}
            None => return Err(Error::format(path, format!("line {}: not a number list", lineno + 1))),
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no numeric data"));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::format(path, "rows have different lengths"));
    }
    if width == 1 {
        return Ok(Signal::Series(rows.into_iter().map(|r| r[0]).collect()));
    }
    if rows.len() != width {
        return Err(Error::format(
            path,
            format!("field is {} x {width}, only square fields are supported", rows.len()),
        ));
    }
    Ok(Signal::Field {
        side: width,
        values: rows.concat(),
    })
}

fn bytes_to_f64(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::format(path, format!("{} bytes is not a whole number of f64", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn f64_to_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn read_f64_file(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    bytes_to_f64(path, &bytes)
}

pub fn read_binary(path: &Path) -> Result<Signal> {
    let hpath = header_path(path);
    let header: BinaryHeader = read_json(&hpath)?;
    if header.dtype != DTYPE_F64_LE {
        return Err(Error::format(&hpath, format!("unsupported dtype {:?}", header.dtype)));
    }
    let values = read_f64_file(path)?;
    let expect = |n: usize| -> Result<()> {
        if values.len() != n {
            return Err(Error::format(path, format!("header announces {n} values, file has {}", values.len())));
        }
        Ok(())
    };
    match (header.dims, header.length, header.side) {
        (1, length, _) => {
            if let Some(n) = length {
                expect(n)?;
            }
            Ok(Signal::Series(values))
        }
        (2, _, Some(side)) => {
            expect(side * side)?;
            Ok(Signal::Field { side, values })
        }
        (2, _, None) => Err(Error::format(&hpath, "2D header without side")),
        (d, _, _) => Err(Error::format(&hpath, format!("unsupported dims {d}"))),
    }
}

pub fn write_binary(path: &Path, signal: &Signal) -> Result<()> {
    let header = match signal {
        Signal::Series(v) => BinaryHeader {
            dims: 1,
            length: Some(v.len()),
            side: None,
            dtype: DTYPE_F64_LE.into(),
        },
        Signal::Field { side, .. } => BinaryHeader {
            dims: 2,
            length: None,
            side: Some(*side),
            dtype: DTYPE_F64_LE.into(),
        },
    };
    write_bytes(path, &f64_to_bytes(signal.values()))?;
    write_json(&header_path(path), &header)
}

pub fn write_text(path: &Path, signal: &Signal) -> Result<()> {
    let mut out = String::with_capacity(signal.len() * 24);
    match signal {
        Signal::Series(v) => {
            for x in v {
                out.push_str(&format!("{x:e}\n"));
            }
        }
        Signal::Field { side, values } => {
            for row in values.chunks(*side) {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
    }
    write_bytes(path, out.as_bytes())
}

/// Writes `.bin` (plus sidecar) or text depending on the extension.
pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => write_binary(path, signal),
        _ => write_text(path, signal),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridEntry {
    j: usize,
    rows: usize,
    cols: usize,
    arrays: Vec<String>,
    valid: String,
    n_valid: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientIndex {
    kind: String,
    dim: Dim,
    sample_count: usize,
    normalization: Normalization,
    filter: Option<WaveletFilter>,
    approx: String,
    octaves: Vec<GridEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LeaderIndex {
    kind: String,
    p: PValue,
    mode: Neighborhood,
    dim: Dim,
    octaves: Vec<GridEntry>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_mask(path: &Path, mask: &[bool]) -> Result<()> {
    write_bytes(path, &mask.iter().map(|&b| b as u8).collect::<Vec<_>>())
}

fn read_mask(path: &Path, len: usize) -> Result<Vec<bool>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != len {
        return Err(Error::format(path, format!("mask has {} entries, expected {len}", bytes.len())));
    }
    bytes
        .into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::format(path, format!("mask byte {other}"))),
        })
        .collect()
}

fn read_grid(dir: &Path, name: &str, len: usize) -> Result<Vec<f64>> {
    let path = dir.join(name);
    let v = read_f64_file(&path)?;
    if v.len() != len {
        return Err(Error::format(&path, format!("{} values, expected {len}", v.len())));
    }
    Ok(v)
}

pub fn write_pyramid_dir(dir: &Path, pyramid: &CoefficientPyramid) -> Result<()> {
    ensure_dir(dir)?;
    let mut entries = Vec::with_capacity(pyramid.num_octaves());
    for (idx, oct) in pyramid.octaves.iter().enumerate() {
        let j = idx + 1;
        let mut arrays = Vec::with_capacity(oct.bands.len());
        for (b, band) in oct.bands.iter().enumerate() {
            let name = format!("j{j:02}_band{}.bin", b + 1);
            write_bytes(&dir.join(&name), &f64_to_bytes(band))?;
            arrays.push(name);
        }
        let valid = format!("j{j:02}_valid.u8");
        write_mask(&dir.join(&valid), &oct.valid)?;
        entries.push(GridEntry {
            j,
            rows: oct.rows,
            cols: oct.cols,
            arrays,
            valid,
            n_valid: oct.n_valid(),
        });
    }
    write_bytes(&dir.join("approx.bin"), &f64_to_bytes(&pyramid.approx))?;
    let index = CoefficientIndex {
        kind: "coefficients".into(),
        dim: pyramid.dim,
        sample_count: pyramid.sample_count,
        normalization: pyramid.normalization,
        filter: pyramid.filter.clone(),
        approx: "approx.bin".into(),
        octaves: entries,
    };
    write_json(&dir.join("index.json"), &index)
}

pub fn read_pyramid_dir(dir: &Path) -> Result<CoefficientPyramid> {
    let ipath = dir.join("index.json");
    let index: CoefficientIndex = read_json(&ipath)?;
    if index.kind != "coefficients" {
        return Err(Error::format(&ipath, format!("expected a coefficient pyramid, found {:?}", index.kind)));
    }
    let mut octaves = Vec::with_capacity(index.octaves.len());
    for e in &index.octaves {
        let len = e.rows * e.cols;
        let bands = e
            .arrays
            .iter()
            .map(|name| read_grid(dir, name, len))
            .collect::<Result<Vec<_>>>()?;
        octaves.push(Octave {
            rows: e.rows,
            cols: e.cols,
            bands,
            valid: read_mask(&dir.join(&e.valid), len)?,
        });
    }
    let mut pyramid = CoefficientPyramid::from_parts(index.dim, octaves)?;
    pyramid.sample_count = index.sample_count;
    pyramid.normalization = index.normalization;
    pyramid.filter = index.filter;
    pyramid.approx = read_f64_file(&dir.join(&index.approx))?;
    Ok(pyramid)
}

pub fn write_leaders_dir(dir: &Path, leaders: &LeaderPyramid) -> Result<()> {
    ensure_dir(dir)?;
    let mut entries = Vec::with_capacity(leaders.num_octaves());
    for (idx, oct) in leaders.octaves.iter().enumerate() {
        let j = idx + 1;
        let name = format!("j{j:02}_leaders.bin");
        write_bytes(&dir.join(&name), &f64_to_bytes(&oct.values))?;
        let valid = format!("j{j:02}_valid.u8");
        write_mask(&dir.join(&valid), &oct.valid)?;
        entries.push(GridEntry {
            j,
            rows: oct.rows,
            cols: oct.cols,
            arrays: vec![name],
            valid,
            n_valid: oct.n_valid(),
        });
    }
    let index = LeaderIndex {
        kind: "leaders".into(),
        p: leaders.p,
        mode: leaders.mode,
        dim: leaders.dim,
        octaves: entries,
    };
    write_json(&dir.join("index.json"), &index)
}

pub fn read_leaders_dir(dir: &Path) -> Result<LeaderPyramid> {
    let ipath = dir.join("index.json");
    let index: LeaderIndex = read_json(&ipath)?;
    if index.kind != "leaders" {
        return Err(Error::format(&ipath, format!("expected a leader pyramid, found {:?}", index.kind)));
    }
    let mut octaves = Vec::with_capacity(index.octaves.len());
    for e in &index.octaves {
        let len = e.rows * e.cols;
        let name = e
            .arrays
            .first()
            .ok_or_else(|| Error::format(&ipath, format!("octave {} lists no array", e.j)))?;
        octaves.push(LeaderOctave {
            rows: e.rows,
            cols: e.cols,
            values: read_grid(dir, name, len)?,
            valid: read_mask(&dir.join(&e.valid), len)?,
        });
    }
    Ok(LeaderPyramid {
        p: index.p,
        mode: index.mode,
        dim: index.dim,
        octaves,
    })
}

/// Writes rows of a CSV table with a header line.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    read_json(path)
}
