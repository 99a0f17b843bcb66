//! Clustering evaluation: permutation-matched accuracy, normalized mutual
//! information, adjusted Rand index.
//!
//! Labels are re-indexed densely, so callers may pass arbitrary integer
//! labelings. Every metric is invariant to renaming clusters on either
//! side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::hungarian::hungarian;
use crate::numerics::matrix::Matrix;

/// NMI normalizer. The geometric mean is the default; the arithmetic mean
/// is provided for comparability with codebases that use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNorm {
    #[default]
    Sqrt,
    ArithmeticMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn evaluate(y_true: &[usize], y_pred: &[usize]) -> Result<MetricTriple> {
    Ok(MetricTriple {
        acc: acc(y_true, y_pred)?,
        nmi: nmi(y_true, y_pred, NmiNorm::Sqrt)?,
        ari: ari(y_true, y_pred)?,
    })
}

fn dense_relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<usize> = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let dense = labels
        .iter()
        .map(|l| sorted.binary_search(l).expect("label present"))
        .collect();
    (dense, sorted.len())
}

fn contingency(y_true: &[usize], y_pred: &[usize]) -> Result<(Vec<Vec<usize>>, usize, usize)> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "label lengths differ: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("empty labelings".to_string()));
    }
    let (t, kt) = dense_relabel(y_true);
    let (p, kp) = dense_relabel(y_pred);
    let mut table = vec![vec![0usize; kp]; kt];
    for (&a, &b) in t.iter().zip(&p) {
        table[a][b] += 1;
    }
    Ok((table, kt, kp))
}

/// Best-match accuracy: the Hungarian assignment between predicted
/// clusters and classes that maximizes agreement.
pub fn acc(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let (table, kt, kp) = contingency(y_true, y_pred)?;
    let k = kt.max(kp);
    let mut cost = Matrix::zeros(k, k);
    for (a, row) in table.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            cost.set(b, a, -(count as f64)); // rows: predicted, cols: true
        }
    }
    let perm = hungarian(&cost)?;
    let matched: usize = perm
        .iter()
        .enumerate()
        .map(|(b, &a)| if b < kp && a < kt { table[a][b] } else { 0 })
        .sum();
    Ok(matched as f64 / y_true.len() as f64)
}

/// Floating-point sum in a canonical order, so the result is invariant
/// to cluster renamings that merely reorder the terms.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// I(Y;C) normalized by the chosen mean of the entropies, natural log.
///
/// Conventions: identical partitions with zero entropy → 1; exactly one
/// zero-entropy side → 0. Invariant to cluster renaming bit-for-bit.
pub fn nmi(y_true: &[usize], y_pred: &[usize], norm: NmiNorm) -> Result<f64> {
    let (table, _, kp) = contingency(y_true, y_pred)?;
    let n = y_true.len() as f64;
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..kp).map(|b| table.iter().map(|r| r[b]).sum()).collect();

    let entropy = |sums: &[usize]| -> f64 {
        sorted_sum(
            sums.iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.ln()
                })
                .collect(),
        )
    };
    let h_true = entropy(&row_sums);
    let h_pred = entropy(&col_sums);

    if h_true == 0.0 && h_pred == 0.0 {
        // both constant: identical iff the single clusters coincide, which
        // they always do after dense relabeling
        return Ok(1.0);
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return Ok(0.0);
    }

    let mut terms = Vec::new();
    for (a, row) in table.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            if count > 0 {
                let pij = count as f64 / n;
                let pi = row_sums[a] as f64 / n;
                let pj = col_sums[b] as f64 / n;
                terms.push(pij * (pij / (pi * pj)).ln());
            }
        }
    }
    let mi = sorted_sum(terms);
    let denom = match norm {
        NmiNorm::Sqrt => (h_true * h_pred).sqrt(),
        NmiNorm::ArithmeticMean => 0.5 * (h_true + h_pred),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Pair-counting adjusted Rand index. Degenerate pair structure (both
/// partitions agree on every pair) yields 1.
pub fn ari(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let (table, _, kp) = contingency(y_true, y_pred)?;
    let n = y_true.len();
    if n == 1 {
        return Ok(1.0);
    }
    let comb2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..kp)
        .map(|b| comb2(table.iter().map(|r| r[b]).sum()))
        .sum();
    let total = comb2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}
