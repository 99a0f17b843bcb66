//! Per-view presence masks with the coverage guarantee that every sample
//! survives in at least one view.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// m binary vectors of length N; `views[i][j]` says sample `j` exists in
/// view `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceMask {
    views: Vec<Vec<bool>>,
}

impl PresenceMask {
    pub fn complete(n_views: usize, n_samples: usize) -> Self {
        PresenceMask {
            views: vec![vec![true; n_samples]; n_views],
        }
    }

    pub fn from_views(views: Vec<Vec<bool>>) -> Result<Self> {
        let n = views.first().map_or(0, Vec::len);
        if views.is_empty() || n == 0 {
            return Err(Error::invalid(
                "mask needs at least one view and one sample",
            ));
        }
        if views.iter().any(|v| v.len() != n) {
            return Err(Error::shape("mask views have unequal lengths"));
        }
        let mask = PresenceMask { views };
        mask.validate_coverage()?;
        Ok(mask)
    }

    /// Drops `round(rate_i · N)` samples from each view, then repairs any
    /// sample that lost every view by re-enabling one uniformly chosen
    /// view entry, compensating (when a fully covered sample exists in
    /// that view) so per-view missing counts stay exact.
    pub fn generate(n_samples: usize, rates: &[f64], seed: u64) -> Result<Self> {
        let m = rates.len();
        if m == 0 || n_samples == 0 {
            return Err(Error::invalid("need at least one view and one sample"));
        }
        if rates.iter().any(|&r| !(0.0..1.0).contains(&r)) {
            // this also keeps Σ rates < m, so repair always has room
            return Err(Error::invalid(format!("rates must be in [0,1): {rates:?}")));
        }
        let mut rng = Rng::substream(seed, "presence-mask");
        let mut views = vec![vec![true; n_samples]; m];
        for (i, &rate) in rates.iter().enumerate() {
            let missing = (rate * n_samples as f64).round() as usize;
            for j in rng.choose_indices(n_samples, missing) {
                views[i][j] = false;
            }
        }

        // repair pass
        for j in 0..n_samples {
            if views.iter().any(|v| v[j]) {
                continue;
            }
            let pick = rng.below(m);
            views[pick][j] = true;
            if m >= 2 {
                // compensate by dropping a fully covered sample in that view
                let fully: Vec<usize> = (0..n_samples)
                    .filter(|&s| views.iter().all(|v| v[s]))
                    .collect();
                if !fully.is_empty() {
                    let victim = fully[rng.below(fully.len())];
                    views[pick][victim] = false;
                }
            }
        }

        let mask = PresenceMask { views };
        mask.validate_coverage()?;
        Ok(mask)
    }

    /// Every sample must be present somewhere.
    pub fn validate_coverage(&self) -> Result<()> {
        for j in 0..self.n_samples() {
            if !self.views.iter().any(|v| v[j]) {
                return Err(Error::invalid(format!(
                    "sample {j} is missing from every view"
                )));
            }
        }
        Ok(())
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views.first().map_or(0, Vec::len)
    }

    pub fn view(&self, i: usize) -> &[bool] {
        &self.views[i]
    }

    pub fn present_count(&self, i: usize) -> usize {
        self.views[i].iter().filter(|&&p| p).count()
    }

    pub fn missing_rate(&self, i: usize) -> f64 {
        1.0 - self.present_count(i) as f64 / self.n_samples() as f64
    }

    /// Global ids present in every view, ascending.
    pub fn overlap_ids(&self) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&j| self.views.iter().all(|v| v[j]))
            .collect()
    }

    /// Views containing the given sample.
    pub fn views_of(&self, sample: usize) -> Vec<usize> {
        (0..self.n_views())
            .filter(|&i| self.views[i][sample])
            .collect()
    }

    /// CSV with one row per sample: m comma-separated 0/1 entries.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for j in 0..self.n_samples() {
            let row: Vec<&str> = self
                .views
                .iter()
                .map(|v| if v[j] { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<bool>> = Vec::new();
        let mut offset = 0usize;
        for line in text.lines() {
            if line.trim().is_empty() {
                offset += line.len() + 1;
                continue;
            }
            let mut row = Vec::new();
            for field in line.split(',') {
                match field.trim() {
                    "0" => row.push(false),
                    "1" => row.push(true),
                    other => {
                        return Err(Error::Format {
                            offset,
                            msg: format!("expected 0 or 1, found {other:?}"),
                        })
                    }
                }
            }
            rows.push(row);
            offset += line.len() + 1;
        }
        if rows.is_empty() {
            return Err(Error::Format {
                offset: 0,
                msg: "empty mask file".into(),
            });
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Format {
                offset: 0,
                msg: "ragged mask rows".into(),
            });
        }
        // transpose sample-major rows into view-major vectors
        let views = (0..m)
            .map(|i| rows.iter().map(|r| r[i]).collect())
            .collect();
        PresenceMask::from_views(views)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rates_give_complete_mask() {
        let mask = PresenceMask::generate(10, &[0.0, 0.0], 1).unwrap();
        assert_eq!(mask, PresenceMask::complete(2, 10));
    }

    #[test]
    fn coverage_holds_for_many_seeds() {
        for seed in 0..200 {
            let mask = PresenceMask::generate(4, &[0.5, 0.5], seed).unwrap();
            mask.validate_coverage().unwrap();
            for i in 0..2 {
                assert_eq!(mask.present_count(i), 2, "seed {seed} view {i}");
            }
        }
    }

    #[test]
    fn benchmark_shaped_mask_counts() {
        let mask = PresenceMask::generate(2000, &[0.2, 0.2, 0.1], 0).unwrap();
        assert_eq!(mask.present_count(0), 1600);
        assert_eq!(mask.present_count(1), 1600);
        assert_eq!(mask.present_count(2), 1800);
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(PresenceMask::generate(10, &[1.0], 0).is_err());
        assert!(PresenceMask::generate(10, &[-0.1, 0.2], 0).is_err());
        assert!(PresenceMask::generate(10, &[0.3, 1.5], 0).is_err());
    }

    #[test]
    fn near_total_missingness_still_covered() {
        for seed in 0..50 {
            let mask = PresenceMask::generate(10, &[0.9, 0.9], seed).unwrap();
            mask.validate_coverage().unwrap();
        }
    }

    #[test]
    fn overlap_is_intersection() {
        let mask = PresenceMask::from_views(vec![
            vec![true, true, false, true],
            vec![true, false, true, true],
        ])
        .unwrap();
        assert_eq!(mask.overlap_ids(), vec![0, 3]);
        assert_eq!(mask.views_of(1), vec![0]);
        assert_eq!(mask.views_of(2), vec![1]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("mask-rt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mask.csv");
        let mask = PresenceMask::generate(37, &[0.3, 0.2, 0.0], 9).unwrap();
        mask.save_csv(&path).unwrap();
        let loaded = PresenceMask::load_csv(&path).unwrap();
        assert_eq!(mask, loaded);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_csv_reports_offset() {
        let dir = std::env::temp_dir().join(format!("mask-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "1,0\nx,1\n").unwrap();
        match PresenceMask::load_csv(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected format error, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
