//! The two graph autoencoder architectures and the inner-product decoder.
//!
//! A 2-layer GCN handles nearly complete views; a 2-layer single-head GAT
//! handles views with more missing data. Both produce node embeddings from
//! which the decoder reconstructs the adjacency; training minimizes a
//! class-weighted binary cross-entropy on that reconstruction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::tape::{GatActivation, Neighborhoods, NodeId, Tape};
use crate::rng::Rng;

/// Output activation of the GCN's second layer. The softmax variant
/// confines embeddings to the probability simplex, which hurts Euclidean
/// clustering; linear is the default, softmax is available as a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    Linear,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Gcn,
    Gat,
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EncoderKind::Gcn => write!(f, "gcn"),
            EncoderKind::Gat => write!(f, "gat"),
        }
    }
}

/// Graph operator an encoder propagates over: the normalized adjacency
/// for GCN, neighbor lists for GAT attention.
#[derive(Debug, Clone)]
pub enum Propagation {
    Gcn(Arc<Matrix>),
    Gat(Arc<Neighborhoods>),
}

#[derive(Debug, Clone)]
pub struct GcnEncoder {
    pub w0: Matrix,
    pub w1: Matrix,
    pub output: OutputActivation,
}

impl GcnEncoder {
    pub fn new(d_in: usize, d1: usize, d2: usize, output: OutputActivation, rng: &mut Rng) -> Self {
        GcnEncoder {
            w0: Matrix::glorot(d_in, d1, rng),
            w1: Matrix::glorot(d1, d2, rng),
            output,
        }
    }

    /// act(Â·ReLU(Â·X·W0)·W1) on the tape. `params` are the tape nodes for
    /// [w0, w1].
    pub fn build_forward(
        &self,
        tape: &mut Tape,
        x: NodeId,
        a_hat: &Arc<Matrix>,
        params: &[NodeId],
    ) -> Result<NodeId> {
        let a = tape.constant((**a_hat).clone());
        let xw = tape.matmul(x, params[0])?;
        let prop1 = tape.matmul(a, xw)?;
        let hidden = tape.relu(prop1);
        let hw = tape.matmul(hidden, params[1])?;
        let prop2 = tape.matmul(a, hw)?;
        Ok(match self.output {
            OutputActivation::Linear => prop2,
            OutputActivation::Softmax => tape.row_softmax(prop2),
        })
    }
}

#[derive(Debug, Clone)]
pub struct GatEncoder {
    pub w0: Matrix,
    /// attention vector of layer 1, length 2·d1
    pub a0: Matrix,
    pub w1: Matrix,
    /// attention vector of layer 2, length 2·d2
    pub a1: Matrix,
}

impl GatEncoder {
    pub fn new(d_in: usize, d1: usize, d2: usize, rng: &mut Rng) -> Self {
        GatEncoder {
            w0: Matrix::glorot(d_in, d1, rng),
            a0: Matrix::glorot(2 * d1, 1, rng),
            w1: Matrix::glorot(d1, d2, rng),
            a1: Matrix::glorot(2 * d2, 1, rng),
        }
    }

    /// Two attention layers: ELU after the first, linear second. `params`
    /// are the tape nodes for [w0, a0, w1, a1].
    pub fn build_forward(
        &self,
        tape: &mut Tape,
        x: NodeId,
        graph: &Arc<Neighborhoods>,
        params: &[NodeId],
    ) -> Result<NodeId> {
        let h1 = tape.gat_layer(
            x,
            params[0],
            params[1],
            Arc::clone(graph),
            GatActivation::Elu,
        )?;
        tape.gat_layer(
            h1,
            params[2],
            params[3],
            Arc::clone(graph),
            GatActivation::Linear,
        )
    }
}

#[derive(Debug, Clone)]
pub enum Encoder {
    Gcn(GcnEncoder),
    Gat(GatEncoder),
}

impl Encoder {
    pub fn kind(&self) -> EncoderKind {
        match self {
            Encoder::Gcn(_) => EncoderKind::Gcn,
            Encoder::Gat(_) => EncoderKind::Gat,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Encoder::Gcn(e) => e.w1.cols(),
            Encoder::Gat(e) => e.w1.cols(),
        }
    }

    pub fn params(&self) -> Vec<&Matrix> {
        match self {
            Encoder::Gcn(e) => vec![&e.w0, &e.w1],
            Encoder::Gat(e) => vec![&e.w0, &e.a0, &e.w1, &e.a1],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        match self {
            Encoder::Gcn(e) => vec![&mut e.w0, &mut e.w1],
            Encoder::Gat(e) => vec![&mut e.w0, &mut e.a0, &mut e.w1, &mut e.a1],
        }
    }

    /// Pushes the current parameters onto a tape as trainable leaves.
    pub fn push_params(&self, tape: &mut Tape) -> Vec<NodeId> {
        self.params()
            .into_iter()
            .map(|p| tape.param(p.clone()))
            .collect()
    }

    pub fn build_forward(
        &self,
        tape: &mut Tape,
        x: NodeId,
        prop: &Propagation,
        params: &[NodeId],
    ) -> Result<NodeId> {
        match (self, prop) {
            (Encoder::Gcn(e), Propagation::Gcn(a_hat)) => e.build_forward(tape, x, a_hat, params),
            (Encoder::Gat(e), Propagation::Gat(graph)) => e.build_forward(tape, x, graph, params),
            _ => Err(Error::Protocol("encoder/propagation kind mismatch".into())),
        }
    }

    /// Embeddings without gradients.
    pub fn embed(&self, x: &Matrix, prop: &Propagation) -> Result<Matrix> {
        let mut tape = Tape::new();
        let x_id = tape.constant(x.clone());
        let param_ids: Vec<NodeId> = self
            .params()
            .into_iter()
            .map(|p| tape.constant(p.clone()))
            .collect();
        let z = self.build_forward(&mut tape, x_id, prop, &param_ids)?;
        Ok(tape.value(z).clone())
    }
}

/// sigmoid(Z·Zᵀ): probability of every edge under the inner-product
/// decoder. Symmetric, entries in (0,1).
pub fn decode_adjacency(z: &Matrix) -> Matrix {
    let n = z.rows();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        for r in j..n {
            let dot: f64 = z.row(j).iter().zip(z.row(r)).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-dot).exp());
            out.set(j, r, p);
            out.set(r, j, p);
        }
    }
    out
}

/// Positive-class weight (n² − nnz)/nnz, capped at n² for edgeless graphs.
pub fn positive_weight(adjacency: &Matrix) -> f64 {
    let n2 = adjacency.rows() * adjacency.cols();
    let nnz = adjacency.data().iter().filter(|&&v| v != 0.0).count();
    if nnz == 0 {
        n2 as f64
    } else {
        (n2 - nnz) as f64 / nnz as f64
    }
}

/// Mean binary cross-entropy between a binary adjacency and a
/// reconstruction in (0,1), with `positive_weight` applied to edges.
pub fn reconstruction_loss(adjacency: &Matrix, reconstructed: &Matrix) -> Result<f64> {
    if adjacency.shape() != reconstructed.shape() {
        return Err(Error::shape(format!(
            "reconstruction_loss: {}x{} vs {}x{}",
            adjacency.rows(),
            adjacency.cols(),
            reconstructed.rows(),
            reconstructed.cols()
        )));
    }
    let w_pos = positive_weight(adjacency);
    let n2 = (adjacency.rows() * adjacency.cols()) as f64;
    let mut total = 0.0;
    for (&a, &p) in adjacency.data().iter().zip(reconstructed.data()) {
        total += if a != 0.0 {
            -w_pos * p.ln()
        } else {
            -(1.0 - p).ln()
        };
    }
    Ok(total / n2)
}
