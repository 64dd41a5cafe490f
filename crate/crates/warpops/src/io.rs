//! Signal and matrix file formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Result, WarpError};
use crate::swf::{OperatorKind, OperatorMatrix};

pub const SIGNAL_MAGIC: [u8; 8] = *b"WARPSIG\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Binary,
    Json,
}

impl std::str::FromStr for Format {
    type Err = WarpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "binary" => Ok(Format::Binary),
            "json" => Ok(Format::Json),
            _ => Err(WarpError::Format(format!("unknown format {s:?}"))),
        }
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Binary signal: 8-byte magic, `u64` LE length, then interleaved LE `f64` pairs.
pub fn encode_signal_binary(x: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 16 * x.len());
    out.extend_from_slice(&SIGNAL_MAGIC);
    out.extend_from_slice(&(x.len() as u64).to_le_bytes());
    for v in x {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn read_pairs(bytes: &[u8]) -> Vec<Complex64> {
    bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect()
}

pub fn decode_signal_binary(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() < 16 || bytes[..8] != SIGNAL_MAGIC {
        return Err(WarpError::Format("missing signal header".into()));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != 16 * n {
        return Err(WarpError::Format(format!("header announces {n} samples, body holds {} bytes", body.len())));
    }
    Ok(read_pairs(body))
}

/// One `re,im` pair per line; a header line starting with a letter is skipped.
pub fn encode_signal_csv(x: &[Complex64]) -> String {
    let mut s = String::from("re,im\n");
    for v in x {
        s.push_str(&format!("{},{}\n", fmt_f64(v.re), fmt_f64(v.im)));
    }
    s
}

pub fn decode_signal_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let bad = || WarpError::Format(format!("line {}: expected `re,im` or `re`", i + 1));
        let mut it = line.split(',').map(str::trim);
        let re: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = match it.next() {
            Some(t) => t.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if it.next().is_some() {
            return Err(bad());
        }
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

pub fn encode_signal_json(x: &[Complex64]) -> String {
    let v: Vec<[f64; 2]> = x.iter().map(|c| [c.re, c.im]).collect();
    serde_json::to_string(&v).expect("finite pairs serialize")
}

pub fn decode_signal_json(text: &str) -> Result<Vec<Complex64>> {
    let v: Vec<[f64; 2]> = serde_json::from_str(text)?;
    Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

pub fn encode_signal(x: &[Complex64], format: Format) -> Vec<u8> {
    match format {
        Format::Binary => encode_signal_binary(x),
        Format::Csv => encode_signal_csv(x).into_bytes(),
        Format::Json => encode_signal_json(x).into_bytes(),
    }
}

/// Decodes a signal, detecting the format from its content.
pub fn decode_signal(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.starts_with(&SIGNAL_MAGIC) {
        return decode_signal_binary(bytes);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| WarpError::Format("signal is neither binary nor text".into()))?;
    if text.trim_start().starts_with('[') {
        decode_signal_json(text)
    } else {
        decode_signal_csv(text)
    }
}

pub fn read_signal(path: &Path) -> Result<Vec<Complex64>> {
    decode_signal(&fs::read(path)?)
}

pub fn write_signal(path: &Path, x: &[Complex64], format: Format) -> Result<()> {
    fs::write(path, encode_signal(x, format))?;
    Ok(())
}

/// Metadata written next to a binary matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    pub kind: OperatorKind,
    pub b: f64,
    pub spec: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<serde_json::Value>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Row-major interleaved LE `f64` pairs.
pub fn encode_matrix_binary(m: &DMatrix<Complex64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix_binary(bytes: &[u8], rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
    if bytes.len() != 16 * rows * cols {
        return Err(WarpError::Format(format!("expected {} bytes for {rows}x{cols}, found {}", 16 * rows * cols, bytes.len())));
    }
    let v = read_pairs(bytes);
    Ok(DMatrix::from_row_slice(rows, cols, &v))
}

/// Rows of `re,im` pairs: `re00,im00,re01,im01,...`.
pub fn encode_matrix_csv(m: &DMatrix<Complex64>) -> String {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{},{}", fmt_f64(m[(r, c)].re), fmt_f64(m[(r, c)].im))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn encode_matrix_json(op: &OperatorMatrix, map: Option<serde_json::Value>) -> serde_json::Value {
    let data: Vec<Vec<[f64; 2]>> =
        (0..op.rows()).map(|r| (0..op.cols()).map(|c| [op.data[(r, c)].re, op.data[(r, c)].im]).collect()).collect();
    serde_json::json!({
        "meta": sidecar(op, map),
        "data": data,
    })
}

fn sidecar(op: &OperatorMatrix, map: Option<serde_json::Value>) -> MatrixSidecar {
    MatrixSidecar { rows: op.rows(), cols: op.cols(), kind: op.kind, b: op.b, spec: op.spec, map }
}

/// Writes an operator; the binary format also writes `<path>.json` with the metadata.
pub fn write_matrix(path: &Path, op: &OperatorMatrix, format: Format, map: Option<serde_json::Value>) -> Result<()> {
    match format {
        Format::Binary => {
            fs::write(path, encode_matrix_binary(&op.data))?;
            let meta = serde_json::to_string_pretty(&sidecar(op, map))?;
            let mut f = fs::File::create(sidecar_path(path))?;
            writeln!(f, "{meta}")?;
        }
        Format::Csv => fs::write(path, encode_matrix_csv(&op.data))?,
        Format::Json => fs::write(path, serde_json::to_string(&encode_matrix_json(op, map))?)?,
    }
    Ok(())
}

/// Reads a binary matrix and its sidecar.
pub fn read_matrix(path: &Path) -> Result<(DMatrix<Complex64>, MatrixSidecar)> {
    let meta: MatrixSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let m = decode_matrix_binary(&fs::read(path)?, meta.rows, meta.cols)?;
    Ok((m, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Complex64> {
        vec![Complex64::new(0.1, -2.5), Complex64::new(1.0 / 3.0, 1e-300), Complex64::new(-0.0, 7.0)]
    }

    #[test]
    fn signal_formats_round_trip() {
        let x = sample();
        for f in [Format::Binary, Format::Csv, Format::Json] {
            assert_eq!(decode_signal(&encode_signal(&x, f)).unwrap(), x, "{f:?}");
        }
    }

    #[test]
    fn binary_header_layout() {
        let b = encode_signal_binary(&sample());
        assert_eq!(&b[..8], b"WARPSIG\0");
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 3);
        assert_eq!(b.len(), 16 + 48);
        assert!(decode_signal_binary(&b[..40]).is_err());
    }

    #[test]
    fn real_csv_column() {
        let x = decode_signal_csv("1.5\n-2\n").unwrap();
        assert_eq!(x, vec![Complex64::new(1.5, 0.0), Complex64::new(-2.0, 0.0)]);
    }

    #[test]
    fn matrix_binary_is_row_major() {
        let m = DMatrix::from_fn(2, 3, |r, c| Complex64::new((3 * r + c) as f64, -(c as f64)));
        let b = encode_matrix_binary(&m);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 1.0);
        assert_eq!(decode_matrix_binary(&b, 2, 3).unwrap(), m);
    }
}
