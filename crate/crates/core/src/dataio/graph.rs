//! kNN graph construction over cosine similarity and the symmetric
//! degree normalization used by the GCN propagation.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Mutual-or kNN graph: edge (j, r) exists when r is among the k most
/// cosine-similar rows to j or vice versa. Ties break toward the lower
/// index; zero-norm rows select no neighbors of their own.
pub fn knn_graph(features: &Matrix, k: usize) -> Result<Matrix> {
    let n = features.rows();
    if k == 0 {
        return Err(Error::invalid("knn_graph: k must be at least 1"));
    }
    if n < 2 {
        return Err(Error::invalid("knn_graph: need at least two rows"));
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| features.row(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut adj = Matrix::zeros(n, n);
    let k = k.min(n - 1);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for j in 0..n {
        if norms[j] == 0.0 {
            continue; // similar to nothing
        }
        scored.clear();
        for r in 0..n {
            if r == j {
                continue;
            }
            let sim = if norms[r] == 0.0 {
                0.0
            } else {
                let dot: f64 = features
                    .row(j)
                    .iter()
                    .zip(features.row(r))
                    .map(|(a, b)| a * b)
                    .sum();
                dot / (norms[j] * norms[r])
            };
            scored.push((sim, r));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, r) in scored.iter().take(k) {
            adj.set(j, r, 1.0);
            adj.set(r, j, 1.0); // symmetrize by OR
        }
    }
    Ok(adj)
}

/// D̃^{-1/2} (A + I) D̃^{-1/2} — the self-looped, symmetrically normalized
/// propagation operator. Requires a square, symmetric, zero-diagonal
/// input; self-loops guarantee positive degrees.
pub fn normalize_adjacency(adj: &Matrix) -> Result<Matrix> {
    if !adj.is_square() {
        return Err(Error::shape("normalize_adjacency: square input required"));
    }
    if !adj.is_symmetric(0.0) {
        return Err(Error::invalid(
            "normalize_adjacency: input must be symmetric",
        ));
    }
    let n = adj.rows();
    for j in 0..n {
        if adj.get(j, j) != 0.0 {
            return Err(Error::invalid("normalize_adjacency: diagonal must be zero"));
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|j| {
            let deg: f64 = adj.row(j).iter().sum::<f64>() + 1.0;
            1.0 / deg.sqrt()
        })
        .collect();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        for r in 0..n {
            let tilde = adj.get(j, r) + if j == r { 1.0 } else { 0.0 };
            if tilde != 0.0 {
                out.set(j, r, tilde * inv_sqrt_deg[j] * inv_sqrt_deg[r]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn large_k_gives_complete_graph() {
        let mut rng = Rng::new(1);
        let data: Vec<f64> = (0..5 * 3).map(|_| rng.normal()).collect();
        let x = Matrix::from_vec(5, 3, data).unwrap();
        let adj = knn_graph(&x, 10).unwrap();
        for j in 0..5 {
            for r in 0..5 {
                let expect = if j == r { 0.0 } else { 1.0 };
                assert_eq!(adj.get(j, r), expect);
            }
        }
    }

    #[test]
    fn orthogonal_pairs_form_disjoint_edges() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let adj = knn_graph(&x, 1).unwrap();
        assert_eq!(adj.get(0, 1), 1.0);
        assert_eq!(adj.get(2, 3), 1.0);
        assert_eq!(adj.get(0, 2), 0.0);
        assert_eq!(adj.get(0, 3), 0.0);
        assert_eq!(adj.get(1, 2), 0.0);
        assert_eq!(adj.get(1, 3), 0.0);
    }

    #[test]
    fn symmetric_zero_diagonal_min_degree() {
        let mut rng = Rng::new(17);
        let data: Vec<f64> = (0..10 * 4).map(|_| rng.normal()).collect();
        let x = Matrix::from_vec(10, 4, data).unwrap();
        let adj = knn_graph(&x, 3).unwrap();
        assert!(adj.is_symmetric(0.0));
        for j in 0..10 {
            assert_eq!(adj.get(j, j), 0.0);
            let deg: f64 = adj.row(j).iter().sum();
            assert!(deg >= 3.0, "row {j} degree {deg}");
        }
    }

    #[test]
    fn zero_norm_row_selects_nothing() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.1]]).unwrap();
        let adj = knn_graph(&x, 1).unwrap();
        // rows 1 and 2 prefer each other; row 0 picks nobody
        assert_eq!(adj.get(1, 2), 1.0);
        assert_eq!(adj.get(0, 1), 0.0);
        assert_eq!(adj.get(0, 2), 0.0);
    }

    #[test]
    fn normalize_single_edge() {
        let adj = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let norm = normalize_adjacency(&adj).unwrap();
        for j in 0..2 {
            for r in 0..2 {
                assert!((norm.get(j, r) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_empty_graph_is_identity() {
        let adj = Matrix::zeros(4, 4);
        let norm = normalize_adjacency(&adj).unwrap();
        assert_eq!(norm, Matrix::identity(4));
    }

    #[test]
    fn normalize_triangle_is_uniform() {
        let mut adj = Matrix::zeros(3, 3);
        for j in 0..3 {
            for r in 0..3 {
                if j != r {
                    adj.set(j, r, 1.0);
                }
            }
        }
        let norm = normalize_adjacency(&adj).unwrap();
        for j in 0..3 {
            for r in 0..3 {
                assert!((norm.get(j, r) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalized_diagonal_is_inverse_degree_plus_one() {
        let mut rng = Rng::new(23);
        let data: Vec<f64> = (0..12 * 3).map(|_| rng.normal()).collect();
        let x = Matrix::from_vec(12, 3, data).unwrap();
        let adj = knn_graph(&x, 3).unwrap();
        let norm = normalize_adjacency(&adj).unwrap();
        assert!(norm.is_symmetric(1e-12));
        for j in 0..12 {
            let deg: f64 = adj.row(j).iter().sum();
            assert!((norm.get(j, j) - 1.0 / (deg + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_bad_inputs() {
        assert!(normalize_adjacency(&Matrix::zeros(2, 3)).is_err());
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(normalize_adjacency(&asym).is_err());
        let diag = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(normalize_adjacency(&diag).is_err());
    }
}
