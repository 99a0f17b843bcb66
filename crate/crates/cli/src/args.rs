//! Argument-string parsing helpers shared by the subcommands.

use fedmvc::{Error, Result};

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad integer {p:?} in {s:?}")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number {p:?} in {s:?}")))
        })
        .collect()
}

/// Two comma-separated layer widths, e.g. "128,16".
pub fn parse_dims_pair(s: &str) -> Result<(usize, usize)> {
    let dims = parse_usize_list(s)?;
    if dims.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "expected two layer dims, got {s:?}"
        )));
    }
    Ok((dims[0], dims[1]))
}

/// Seed lists accept "0,3,7" and inclusive ranges "0..4" (five seeds).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad seed range start {lo:?}")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad seed range end {hi:?}")))?;
        if hi < lo {
            return Err(Error::InvalidArgument(format!("empty seed range {s:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad seed {p:?} in {s:?}")))
        })
        .collect()
}
