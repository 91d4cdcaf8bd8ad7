//! Dataset files: text (`csv`) and packed little-endian `f32` (`f32le`).
//!
//! `csv`: one point per line, fields separated by commas and/or whitespace;
//! blank lines and lines starting with `#` are skipped.
//!
//! `f32le`: `n: u32 LE`, `d: u32 LE`, then `n·d` little-endian `f32`
//! coordinates, row-major.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use fastk_core::Dataset;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    F32le,
}

impl Format {
    /// `.f32`, `.f32le` and `.bin` files are binary; everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("f32" | "f32le" | "bin") => Format::F32le,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "f32le" => Ok(Format::F32le),
            other => Err(format!("unknown format `{other}` (expected csv or f32le)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::F32le => "f32le",
        })
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("empty dataset")]
    Empty,
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("line {line}: field {field} is not a number: `{text}`")]
    NotNumeric { line: usize, field: usize, text: String },
    #[error("line {line}: field {field} is not finite")]
    NonFinite { line: usize, field: usize },
    #[error("header declares dimension 0")]
    ZeroDimension,
    #[error("truncated header: {len} bytes, need 8")]
    TruncatedHeader { len: usize },
    #[error("truncated payload at byte offset {offset}: expected {expected} payload bytes")]
    Truncated { offset: usize, expected: usize },
    #[error("{extra} trailing bytes after payload")]
    Trailing { extra: usize },
    #[error("non-finite coordinate at byte offset {offset}")]
    NonFiniteBinary { offset: usize },
}

pub fn read(path: &Path, format: Format) -> Result<Dataset, IngestError> {
    let io = |source| IngestError::Io { path: path.display().to_string(), source };
    match format {
        Format::Csv => parse_csv(&fs::read_to_string(path).map_err(io)?),
        Format::F32le => parse_f32le(&fs::read(path).map_err(io)?),
    }
}

pub fn parse_csv(text: &str) -> Result<Dataset, IngestError> {
    let mut coords = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> =
            trimmed.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let expected = *dim.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(IngestError::Ragged { line, expected, found: fields.len() });
        }
        for (i, f) in fields.iter().enumerate() {
            let value: f64 =
                f.parse().map_err(|_| IngestError::NotNumeric { line, field: i + 1, text: f.to_string() })?;
            if !value.is_finite() {
                return Err(IngestError::NonFinite { line, field: i + 1 });
            }
            coords.push(value);
        }
    }
    let d = dim.ok_or(IngestError::Empty)?;
    Ok(Dataset::from_flat(d, coords).expect("validated rows"))
}

pub fn parse_f32le(bytes: &[u8]) -> Result<Dataset, IngestError> {
    if bytes.len() < 8 {
        return Err(IngestError::TruncatedHeader { len: bytes.len() });
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if n == 0 {
        return Err(IngestError::Empty);
    }
    if d == 0 {
        return Err(IngestError::ZeroDimension);
    }
    let expected = n * d * 4;
    let payload = &bytes[8..];
    if payload.len() < expected {
        return Err(IngestError::Truncated { offset: bytes.len(), expected });
    }
    if payload.len() > expected {
        return Err(IngestError::Trailing { extra: payload.len() - expected });
    }
    let mut coords = Vec::with_capacity(n * d);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let value = f32::from_le_bytes(chunk.try_into().unwrap());
        if !value.is_finite() {
            return Err(IngestError::NonFiniteBinary { offset: 8 + 4 * i });
        }
        coords.push(value as f64);
    }
    Ok(Dataset::from_flat(d, coords).expect("validated payload"))
}

pub fn to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for p in data.points() {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Coordinates are narrowed to `f32`.
pub fn to_f32le(data: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + data.coords().len() * 4);
    out.extend_from_slice(&(data.n() as u32).to_le_bytes());
    out.extend_from_slice(&(data.d() as u32).to_le_bytes());
    for &x in data.coords() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    out
}

pub fn write(path: &Path, data: &Dataset, format: Format) -> std::io::Result<()> {
    let bytes = match format {
        Format::Csv => to_csv(data).into_bytes(),
        Format::F32le => to_f32le(data),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)
}
