//! Dataset ingestion and construction: presence masks, kNN graphs,
//! adjacency normalization, synthetic fixtures and the on-disk formats.

pub mod graph;
pub mod manifest;
pub mod mask;
pub mod matrix_io;
pub mod synthetic;

pub use graph::{knn_graph, normalize_adjacency};
pub use manifest::{Manifest, ViewEntry};
pub use mask::PresenceMask;
pub use matrix_io::{load_labels, load_matrix, save_labels, save_matrix, save_matrix_csv};
pub use synthetic::generate_synthetic;

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// One client's share of the dataset: the rows of its view that survived
/// masking, the kNN graph over them, and bookkeeping for the overlap set.
#[derive(Debug, Clone)]
pub struct ViewDataset {
    /// Retained feature rows, N_i × D_i.
    pub features: Matrix,
    /// Binary symmetric adjacency with zero diagonal, N_i × N_i.
    pub adjacency: Matrix,
    /// Global sample id of each local row; strictly increasing.
    pub global_ids: Vec<usize>,
    /// Local row indices whose global id is present in every view.
    pub overlap_rows: Vec<usize>,
}

impl ViewDataset {
    /// Applies a mask row-selection to a complete view and builds the
    /// local graph on the retained rows only.
    pub fn build(
        complete: &Matrix,
        mask: &PresenceMask,
        view: usize,
        knn_k: usize,
    ) -> Result<Self> {
        let present = mask.view(view);
        if present.len() != complete.rows() {
            return Err(Error::shape(format!(
                "mask covers {} samples, view has {} rows",
                present.len(),
                complete.rows()
            )));
        }
        let global_ids: Vec<usize> = present
            .iter()
            .enumerate()
            .filter_map(|(j, &p)| p.then_some(j))
            .collect();
        if global_ids.is_empty() {
            return Err(Error::invalid(format!("view {view} retains no samples")));
        }
        let features = complete.select_rows(&global_ids);
        let adjacency = if global_ids.len() >= 2 {
            knn_graph(&features, knn_k)?
        } else {
            Matrix::zeros(1, 1)
        };
        let overlap_global = mask.overlap_ids();
        let overlap_rows = global_ids
            .iter()
            .enumerate()
            .filter_map(|(local, gid)| overlap_global.binary_search(gid).ok().map(|_| local))
            .collect();
        Ok(ViewDataset {
            features,
            adjacency,
            global_ids,
            overlap_rows,
        })
    }

    pub fn local_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}
