//! Synthetic multi-view Gaussian blobs sharing cluster identity across
//! views. The primary fixture generator for end-to-end runs.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::rng::Rng;

/// Per-cluster unit-variance Gaussian blobs in every view, with cluster
/// centers rescaled so the minimum inter-center distance is at least
/// `separation` within-cluster standard deviations. Labels are assigned
/// round-robin, shared by all views.
pub fn generate_synthetic(
    n_samples: usize,
    n_clusters: usize,
    dims: &[usize],
    separation: f64,
    seed: u64,
) -> Result<(Vec<Matrix>, Vec<usize>)> {
    if n_clusters < 2 {
        return Err(Error::invalid("need at least two clusters"));
    }
    if n_samples < n_clusters {
        return Err(Error::invalid("need at least one sample per cluster"));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::invalid("view dimensions must be positive"));
    }
    let labels: Vec<usize> = (0..n_samples).map(|j| j % n_clusters).collect();
    let mut views = Vec::with_capacity(dims.len());
    for (v, &dim) in dims.iter().enumerate() {
        let mut rng = Rng::substream(seed, &format!("synthetic-view-{v}"));
        let mut centers = Matrix::zeros(n_clusters, dim);
        for val in centers.data_mut() {
            *val = rng.normal();
        }
        // rescale so min pairwise center distance >= separation (within-std is 1)
        let mut min_dist = f64::INFINITY;
        for a in 0..n_clusters {
            for b in (a + 1)..n_clusters {
                let d: f64 = centers
                    .row(a)
                    .iter()
                    .zip(centers.row(b))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        if min_dist <= 0.0 {
            return Err(Error::invalid("degenerate random centers"));
        }
        let scale = separation / min_dist;
        let centers = centers.scale(scale.max(1.0));

        let mut x = Matrix::zeros(n_samples, dim);
        for (j, &label) in labels.iter().enumerate() {
            let c = centers.row(label).to_vec();
            for (val, mu) in x.row_mut(j).iter_mut().zip(c) {
                *val = mu + rng.normal();
            }
        }
        views.push(x);
    }
    Ok((views, labels))
}
