//! Sample file formats: CSV with one point per line, and raw little-endian
//! `f64` rows.

use std::path::Path;
use std::str::FromStr;

use entrobound::Samples;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    F64le,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::F64le => "f64le",
        }
    }

    /// `f64le` for `.bin`, `.f64` and `.f64le` files, CSV otherwise.
    pub fn from_extension(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin" | "f64" | "f64le") => Format::F64le,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "f64le" => Ok(Format::F64le),
            _ => Err(CliError::Config(format!("unknown format {s:?}"))),
        }
    }
}

pub fn ingest(path: &Path, format: Format, dim: Option<usize>) -> CliResult<Samples<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    match format {
        Format::Csv => {
            let text = String::from_utf8(bytes)
                .map_err(|e| CliError::Parse(format!("not UTF-8 at byte {}", e.utf8_error().valid_up_to())))?;
            parse_csv(&text, dim)
        }
        Format::F64le => {
            let dim = dim.ok_or_else(|| CliError::Config("f64le input needs --k".into()))?;
            parse_f64le(&bytes, dim)
        }
    }
}

fn finite(value: f64, at: impl FnOnce() -> String) -> CliResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Parse(format!("{}: non-finite value {value}", at())))
    }
}

/// Parses CSV rows. A first line whose first field is not a number is a header.
pub fn parse_csv(text: &str, dim: Option<usize>) -> CliResult<Samples<f64>> {
    let mut data = Vec::new();
    let mut width = dim;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        match width {
            Some(k) if k != fields.len() => {
                return Err(CliError::Parse(format!(
                    "line {lineno}: dimension mismatch, expected {k} fields, found {}",
                    fields.len()
                )));
            }
            None => width = Some(fields.len()),
            _ => {}
        }
        for (j, field) in fields.iter().enumerate() {
            let value = field.parse::<f64>().map_err(|_| {
                CliError::Parse(format!("line {lineno}, field {}: {field:?} is not a number", j + 1))
            })?;
            data.push(finite(value, || format!("line {lineno}, field {}", j + 1))?);
        }
    }
    let dim = width.ok_or(CliError::Core(entrobound::Error::EmptySample))?;
    Ok(Samples::new(dim, data)?)
}

pub fn parse_f64le(bytes: &[u8], dim: usize) -> CliResult<Samples<f64>> {
    if dim == 0 {
        return Err(CliError::Config("K must be >= 1".into()));
    }
    if !bytes.len().is_multiple_of(8 * dim) {
        return Err(CliError::Parse(format!(
            "byte length {} is not a multiple of 8 * K = {}",
            bytes.len(),
            8 * dim
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .enumerate()
        .map(|(i, chunk)| {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            finite(v, || format!("byte offset {}", 8 * i))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(Samples::new(dim, data)?)
}

pub fn emit_f64le(samples: &Samples<f64>) -> Vec<u8> {
    samples
        .as_slice()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect()
}
