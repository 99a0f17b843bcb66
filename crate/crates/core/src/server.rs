//! Server-side aggregation: variance-weighted concatenation of overlap
//! embeddings, global k-means, DEC-style target sharpening and Hungarian
//! alignment of cluster indices across communication rounds.

use crate::error::{Error, Result};
use crate::numerics::hungarian::hungarian;
use crate::numerics::kmeans::kmeans_default;
use crate::numerics::matrix::Matrix;
use crate::numerics::tape::student_t_assign;

/// Everything the server holds after one aggregation round.
#[derive(Debug, Clone)]
pub struct GlobalState {
    /// Concatenated weighted overlap features, n_c × Σd_i.
    pub features: Matrix,
    /// Global cluster centers, K × Σd_i.
    pub centers: Matrix,
    /// Student-t soft assignments against the centers, n_c × K.
    pub soft: Matrix,
    /// Sharpened, alignment-permuted pseudo-labels, n_c × K.
    pub pseudo: Matrix,
    /// Column permutation applied by the alignment.
    pub perm: Vec<usize>,
    /// argmax of `pseudo` per row; the labeling the next round aligns to.
    pub hard: Vec<usize>,
    pub round: usize,
}

/// Row-wise argmax with lowest-index tie-break.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    (0..m.rows())
        .map(|r| {
            let row = m.row(r);
            let mut best = 0usize;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Scalar variance of a view's cluster centers: the mean over dimensions
/// of the per-dimension variance across the K center rows.
pub fn center_variance(centers: &Matrix) -> f64 {
    let k = centers.rows() as f64;
    let d = centers.cols();
    let mut total = 0.0;
    for c in 0..d {
        let mean: f64 = (0..centers.rows()).map(|r| centers.get(r, c)).sum::<f64>() / k;
        let var: f64 = (0..centers.rows())
            .map(|r| (centers.get(r, c) - mean).powi(2))
            .sum::<f64>()
            / k;
        total += var;
    }
    total / d as f64
}

/// w_i = 1 + ln(1 + σ_i/Σσ), confined to [1, 1+ln 2]. All-identical
/// centers in every view (Σσ = 0) fall back to uniform weights of 1.
pub fn view_weights(center_list: &[&Matrix]) -> Vec<f64> {
    let sigmas: Vec<f64> = center_list.iter().map(|u| center_variance(u)).collect();
    let total: f64 = sigmas.iter().sum();
    if total <= 0.0 {
        return vec![1.0; center_list.len()];
    }
    sigmas
        .iter()
        .map(|s| 1.0 + (1.0 + s / total).ln())
        .collect()
}

/// Column-wise concatenation of w_i·Z_i in the given (ascending view id)
/// order. Every block must share the row count.
pub fn aggregate(z_list: &[&Matrix], weights: &[f64]) -> Result<Matrix> {
    if z_list.is_empty() || z_list.len() != weights.len() {
        return Err(Error::Protocol(format!(
            "aggregate: {} feature blocks, {} weights",
            z_list.len(),
            weights.len()
        )));
    }
    let n = z_list[0].rows();
    for (i, z) in z_list.iter().enumerate() {
        if z.rows() != n {
            return Err(Error::Protocol(format!(
                "aggregate: view {i} uploads {} overlap rows, expected {n}",
                z.rows()
            )));
        }
    }
    let total_cols: usize = z_list.iter().map(|z| z.cols()).sum();
    let mut out = Matrix::zeros(n, total_cols);
    let mut col0 = 0usize;
    for (z, &w) in z_list.iter().zip(weights) {
        for r in 0..n {
            let src = z.row(r);
            let dst = &mut out.row_mut(r)[col0..col0 + z.cols()];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = w * s;
            }
        }
        col0 += z.cols();
    }
    Ok(out)
}

/// Global k-means plus Student-t soft assignments against the resulting
/// centers. Returns (centers, soft assignments, inertia).
pub fn global_cluster(features: &Matrix, k: usize, seed: u64) -> Result<(Matrix, Matrix, f64)> {
    if features.rows() < k {
        return Err(Error::Protocol(format!(
            "global clustering needs at least {k} overlap rows, have {}",
            features.rows()
        )));
    }
    let km = kmeans_default(features, k, seed)?;
    let soft = student_t_assign(features, &km.centers);
    Ok((km.centers, soft, km.inertia))
}

/// DEC target: t_jk ∝ s_jk²/f_k with f_k the soft cluster frequency,
/// rows renormalized to sum to one. Empty columns contribute nothing.
pub fn sharpen(soft: &Matrix) -> Matrix {
    let (n, k) = soft.shape();
    let freq: Vec<f64> = (0..k)
        .map(|c| (0..n).map(|r| soft.get(r, c)).sum())
        .collect();
    let mut out = Matrix::zeros(n, k);
    for r in 0..n {
        let mut denom = 0.0;
        for (c, &f) in freq.iter().enumerate() {
            if f > 0.0 {
                let v = soft.get(r, c).powi(2) / f;
                out.set(r, c, v);
                denom += v;
            }
        }
        for c in 0..k {
            out.set(r, c, out.get(r, c) / denom);
        }
    }
    out
}

/// Permutes the columns of a sharpened target so its hard labeling best
/// agrees with the previous round's. First round: identity. Ties in the
/// agreement counts break toward the identity permutation, which makes
/// alignment idempotent when the labeling is unchanged.
pub fn align(target: &Matrix, prev_hard: Option<&[usize]>) -> Result<(Matrix, Vec<usize>)> {
    let k = target.cols();
    let Some(prev) = prev_hard else {
        return Ok((target.clone(), (0..k).collect()));
    };
    if prev.len() != target.rows() {
        return Err(Error::Protocol(format!(
            "align: previous labeling covers {} rows, target has {}",
            prev.len(),
            target.rows()
        )));
    }
    let hard_now = argmax_rows(target);
    let mut cost = Matrix::zeros(k, k);
    for (&now, &before) in hard_now.iter().zip(prev) {
        cost.set(now, before, cost.get(now, before) - 1.0);
    }
    for c in 0..k {
        cost.set(c, c, cost.get(c, c) - 1e-9); // tie-break toward identity
    }
    let perm = hungarian(&cost)?;
    let mut out = Matrix::zeros(target.rows(), k);
    for r in 0..target.rows() {
        for (c, &dst) in perm.iter().enumerate() {
            out.set(r, dst, target.get(r, c));
        }
    }
    Ok((out, perm))
}

/// One full server round over the uploads of all views (ascending view id
/// order). `relabel`, when given, permutes the k-means cluster indices
/// before anything downstream sees them — the alignment step must make
/// this invisible, which is exactly what experiments use it to verify.
pub fn server_step(
    z_list: &[&Matrix],
    center_list: &[&Matrix],
    k: usize,
    seed: u64,
    prev_hard: Option<&[usize]>,
    round: usize,
    relabel: Option<&[usize]>,
) -> Result<(GlobalState, Vec<f64>, f64)> {
    let weights = view_weights(center_list);
    let features = aggregate(z_list, &weights)?;
    let (mut centers, mut soft, inertia) = global_cluster(&features, k, seed)?;
    if let Some(relabel) = relabel {
        if relabel.len() != k {
            return Err(Error::invalid("relabel permutation length must be k"));
        }
        let mut c2 = Matrix::zeros(k, centers.cols());
        let mut s2 = Matrix::zeros(soft.rows(), k);
        for (c, &dst) in relabel.iter().enumerate() {
            c2.row_mut(dst).copy_from_slice(centers.row(c));
            for r in 0..soft.rows() {
                s2.set(r, dst, soft.get(r, c));
            }
        }
        centers = c2;
        soft = s2;
    }
    let target = sharpen(&soft);
    let (pseudo, perm) = align(&target, prev_hard)?;
    let hard = argmax_rows(&pseudo);
    Ok((
        GlobalState {
            features,
            centers,
            soft,
            pseudo,
            perm,
            hard,
            round,
        },
        weights,
        inertia,
    ))
}
