//! Lloyd's algorithm with k-means++ seeding and restarts.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub centers: Matrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
}

/// Defaults: 10 restarts, 300 iterations, tol 1e-6 on the inertia change.
pub fn kmeans_default(points: &Matrix, k: usize, seed: u64) -> Result<KmeansResult> {
    kmeans(points, k, seed, 10, 300, 1e-6)
}

pub fn kmeans(
    points: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KmeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("kmeans: k={k} with {n} points")));
    }
    let mut rng = Rng::substream(seed, "kmeans");
    let mut best: Option<KmeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, k, &mut rng, max_iter, tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &Matrix, k: usize, rng: &mut Rng, max_iter: usize, tol: f64) -> KmeansResult {
    let n = points.rows();
    let d = points.cols();
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut prev_inertia = f64::INFINITY;

    for _ in 0..max_iter {
        // assignment
        let mut changed = false;
        let mut inertia = 0.0;
        for j in 0..n {
            let (label, d2) = nearest(points.row(j), &centers);
            if labels[j] != label {
                labels[j] = label;
                changed = true;
            }
            dists[j] = d2;
            inertia += d2;
        }

        // update
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for j in 0..n {
            counts[labels[j]] += 1;
            let row = points.row(j);
            let srow = sums.row_mut(labels[j]);
            for (s, &x) in srow.iter_mut().zip(row) {
                *s += x;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                // repair: the point farthest from its center seeds the empty cluster
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]))
                    .expect("nonempty points");
                centers.row_mut(c).copy_from_slice(points.row(far));
                labels[far] = c;
                dists[far] = 0.0;
                changed = true;
            } else {
                let inv = 1.0 / count as f64;
                let srow = sums.row(c).to_vec();
                for (cv, s) in centers.row_mut(c).iter_mut().zip(srow) {
                    *cv = s * inv;
                }
            }
        }

        if !changed || (prev_inertia - inertia).abs() < tol {
            break;
        }
        prev_inertia = inertia;
    }

    // final assignment against the final centers
    let mut inertia = 0.0;
    for (j, label) in labels.iter_mut().enumerate() {
        let (nearest_label, d2) = nearest(points.row(j), &centers);
        *label = nearest_label;
        inertia += d2;
    }
    KmeansResult {
        centers,
        labels,
        inertia,
    }
}

fn plus_plus_init(points: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = points.rows();
    let d = points.cols();
    let mut centers = Matrix::zeros(k, d);
    let first = rng.below(n);
    centers.row_mut(0).copy_from_slice(points.row(first));

    let mut d2 = vec![0.0f64; n];
    for c in 1..k {
        let mut total = 0.0;
        for (j, slot) in d2.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for prev in 0..c {
                let dist: f64 = points
                    .row(j)
                    .iter()
                    .zip(centers.row(prev))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                best = best.min(dist);
            }
            *slot = best;
            total += best;
        }
        let pick = if total > 0.0 {
            let mut target = rng.next_f64() * total;
            let mut chosen = n - 1;
            for (j, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = j;
                    break;
                }
            }
            chosen
        } else {
            rng.below(n) // all points coincide with a center
        };
        centers.row_mut(c).copy_from_slice(points.row(pick));
    }
    centers
}

fn nearest(point: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut label = 0;
    let mut best = f64::INFINITY;
    for c in 0..centers.rows() {
        let d2: f64 = point
            .iter()
            .zip(centers.row(c))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < best {
            best = d2;
            label = c;
        }
    }
    (label, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs_have_zero_inertia() {
        let pts = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![9.0, 9.0],
            vec![9.0, 9.0],
        ])
        .unwrap();
        let res = kmeans_default(&pts, 2, 0).unwrap();
        assert_eq!(res.inertia, 0.0);
        let mut centers: Vec<Vec<f64>> = (0..2).map(|c| res.centers.row(c).to_vec()).collect();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(centers[0], vec![0.0, 0.0]);
        assert_eq!(centers[1], vec![9.0, 9.0]);
    }

    #[test]
    fn n_equals_k_zero_inertia() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![5.0], vec![-3.0]]).unwrap();
        let res = kmeans_default(&pts, 3, 1).unwrap();
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn one_dimensional_split_matches_partition_oracle() {
        // exhaustive search over all 2-partitions of {0, 0.1, 10, 10.1}
        let values = [0.0, 0.1, 10.0, 10.1];
        let pts = Matrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();

        let mut best_inertia = f64::INFINITY;
        let mut best_centers = (0.0, 0.0);
        for mask in 1u32..(1 << 4) - 1 {
            let (mut a, mut b): (Vec<f64>, Vec<f64>) = (vec![], vec![]);
            for (i, &v) in values.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(v);
                } else {
                    b.push(v);
                }
            }
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let inertia: f64 = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>()
                + b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>();
            if inertia < best_inertia {
                best_inertia = inertia;
                best_centers = (ma.min(mb), ma.max(mb));
            }
        }
        assert!((best_centers.0 - 0.05).abs() < 1e-12);
        assert!((best_centers.1 - 10.05).abs() < 1e-12);

        let res = kmeans_default(&pts, 2, 7).unwrap();
        let mut got: Vec<f64> = (0..2).map(|c| res.centers.get(c, 0)).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - best_centers.0).abs() < 1e-9);
        assert!((got[1] - best_centers.1).abs() < 1e-9);
        assert!((res.inertia - best_inertia).abs() < 1e-9);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let pts = Matrix::zeros(2, 2);
        assert!(matches!(
            kmeans_default(&pts, 3, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = Rng::new(99);
        let data: Vec<f64> = (0..60).map(|_| rng.normal()).collect();
        let pts = Matrix::from_vec(20, 3, data).unwrap();
        let a = kmeans_default(&pts, 4, 5).unwrap();
        let b = kmeans_default(&pts, 4, 5).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn labels_are_nearest_centers() {
        let mut rng = Rng::new(123);
        let data: Vec<f64> = (0..90).map(|_| rng.normal() * 3.0).collect();
        let pts = Matrix::from_vec(30, 3, data).unwrap();
        let res = kmeans_default(&pts, 5, 2).unwrap();
        for j in 0..30 {
            let (nearest_label, _) = nearest(pts.row(j), &res.centers);
            assert_eq!(res.labels[j], nearest_label);
        }
    }

    #[test]
    fn inertia_non_increasing_within_restart() {
        // run Lloyd manually and track inertia across iterations
        let mut rng = Rng::new(77);
        let data: Vec<f64> = (0..80).map(|_| rng.normal()).collect();
        let pts = Matrix::from_vec(40, 2, data).unwrap();
        let mut seed_rng = Rng::substream(3, "kmeans");
        let mut centers = plus_plus_init(&pts, 3, &mut seed_rng);
        let mut prev = f64::INFINITY;
        for _ in 0..20 {
            // assignment + inertia under current centers
            let mut labels = vec![0usize; 40];
            let mut inertia = 0.0;
            for (j, label) in labels.iter_mut().enumerate() {
                let (l, d2) = nearest(pts.row(j), &centers);
                *label = l;
                inertia += d2;
            }
            assert!(
                inertia <= prev + 1e-9,
                "inertia went up: {inertia} > {prev}"
            );
            prev = inertia;
            // center update
            let mut sums = Matrix::zeros(3, 2);
            let mut counts = [0usize; 3];
            for j in 0..40 {
                counts[labels[j]] += 1;
                for (s, &x) in sums.row_mut(labels[j]).iter_mut().zip(pts.row(j)) {
                    *s += x;
                }
            }
            for (c, &count) in counts.iter().enumerate() {
                if count > 0 {
                    let inv = 1.0 / count as f64;
                    for s in sums.row_mut(c).iter_mut() {
                        *s *= inv;
                    }
                    centers.row_mut(c).copy_from_slice(sums.row(c));
                }
            }
        }
    }
}
