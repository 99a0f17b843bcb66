//! Shared math substrate: dense matrices, reverse-mode gradients, Adam,
//! k-means and the Hungarian assignment solver.

pub mod adam;
pub mod hungarian;
pub mod kmeans;
pub mod matrix;
pub mod tape;

pub use adam::AdamState;
pub use hungarian::hungarian;
pub use kmeans::{kmeans, kmeans_default, KmeansResult};
pub use matrix::Matrix;
pub use tape::{Gradients, NodeId, Tape};
