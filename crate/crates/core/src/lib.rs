//! Federated incomplete multi-view clustering with heterogeneous graph
//! autoencoders.
//!
//! Each client owns one view of a partially observed multi-view dataset:
//! a feature matrix over the samples present in that view plus a kNN graph
//! over them. Clients train graph autoencoders locally (a 2-layer GCN for
//! nearly complete views, a 2-layer GAT otherwise), the server aggregates
//! embeddings of the samples shared by every view into a variance-weighted
//! global representation, clusters it, and broadcasts sharpened,
//! permutation-aligned pseudo-labels that guide the next local round.
//!
//! The crate is organized around that protocol:
//!
//! - [`numerics`]: dense matrices, a reverse-mode gradient tape, Adam,
//!   k-means and the Hungarian assignment solver,
//! - [`dataio`]: masks, synthetic generators, graph construction and the
//!   on-disk matrix/manifest formats,
//! - [`gnn`]: the two encoder architectures and the inner-product decoder,
//! - [`client`] / [`server`] / [`federation`]: the protocol itself,
//! - [`metrics`]: ACC / NMI / ARI evaluation.
//!
//! Everything is deterministic given the run seed: the same configuration
//! produces bit-identical results regardless of the client thread count.

pub mod client;
pub mod dataio;
pub mod error;
pub mod federation;
pub mod gnn;
pub mod metrics;
pub mod numerics;
pub mod rng;
pub mod server;

pub use error::{Error, Result};
pub use numerics::matrix::Matrix;
