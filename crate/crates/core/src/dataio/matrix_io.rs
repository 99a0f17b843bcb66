//! Matrix and label files.
//!
//! The binary "FVM1" layout is magic bytes `FVM1`, u64-le rows, u64-le
//! cols, then rows·cols f64-le values row-major. Round-trips are
//! bit-exact. Small matrices may instead be CSV: a `rows,cols` header
//! line followed by one comma-separated line per row; `load_matrix`
//! detects the format from the leading bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

const MAGIC: &[u8; 4] = b"FVM1";

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(20 + m.data().len() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn save_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = format!("{},{}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let fields: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        load_binary(&bytes)
    } else {
        load_csv(&bytes)
    }
}

fn load_binary(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < 20 {
        return Err(Error::Format {
            offset: bytes.len(),
            msg: "truncated header (need 20 bytes)".into(),
        });
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(20))
        .ok_or(Error::Format {
            offset: 4,
            msg: "header dimensions overflow".into(),
        })?;
    if bytes.len() != expected {
        return Err(Error::Format {
            offset: bytes.len().min(expected),
            msg: format!(
                "payload is {} bytes, header implies {}",
                bytes.len(),
                expected
            ),
        });
    }
    let data: Vec<f64> = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

fn load_csv(bytes: &[u8]) -> Result<Matrix> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format {
        offset: e.valid_up_to(),
        msg: "not utf-8".into(),
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Format {
        offset: 0,
        msg: "empty file".into(),
    })?;
    let mut parts = header.split(',');
    let parse_dim = |s: Option<&str>| -> Result<usize> {
        s.and_then(|x| x.trim().parse().ok()).ok_or(Error::Format {
            offset: 0,
            msg: format!("bad csv header {header:?}"),
        })
    };
    let rows = parse_dim(parts.next())?;
    let cols = parse_dim(parts.next())?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut offset = header.len() + 1;
    for line in lines {
        if line.trim().is_empty() {
            offset += line.len() + 1;
            continue;
        }
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Format {
                offset,
                msg: format!("bad float {field:?}"),
            })?;
            data.push(v);
        }
        offset += line.len() + 1;
    }
    if data.len() != rows * cols {
        return Err(Error::Format {
            offset,
            msg: format!("expected {} values, found {}", rows * cols, data.len()),
        });
    }
    Matrix::from_vec(rows, cols, data)
}

/// One integer label per line.
pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    let mut offset = 0usize;
    for line in text.lines() {
        if !line.trim().is_empty() {
            let l: usize = line.trim().parse().map_err(|_| Error::Format {
                offset,
                msg: format!("bad label {line:?}"),
            })?;
            labels.push(l);
        }
        offset += line.len() + 1;
    }
    Ok(labels)
}
