//! Minimum-cost assignment on a square cost matrix (Jonker-Volgenant
//! style shortest augmenting paths, O(n³)).

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Returns `perm` with `perm[row] = col` minimizing `Σ cost[row][perm[row]]`.
pub fn hungarian(cost: &Matrix) -> Result<Vec<usize>> {
    if !cost.is_square() {
        return Err(Error::shape(format!(
            "hungarian: cost is {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    cost.ensure_finite("hungarian cost matrix")?;
    let n = cost.rows();
    if n == 0 {
        return Ok(vec![]);
    }

    // 1-indexed potentials; col_match[j] = row currently assigned to column j
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_match = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_match[0] = row;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_match[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[col_match[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &Matrix, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(r, &c)| cost.get(r, c)).sum()
}
