//! One federated participant.
//!
//! A client owns one view's retained rows and local graph. It pretrains
//! its autoencoder on all local data with the reconstruction loss, then in
//! every communication round trains on the overlap-induced subgraph with
//! the combined loss L_r + γ·KL(P ‖ Q) against the server's pseudo-labels,
//! uploading overlap embeddings and its cluster centers.

use std::sync::Arc;

use crate::dataio::graph::normalize_adjacency;
use crate::dataio::ViewDataset;
use crate::error::{Error, Result};
use crate::gnn::{Encoder, EncoderKind, GatEncoder, GcnEncoder, OutputActivation, Propagation};
use crate::numerics::adam::AdamState;
use crate::numerics::kmeans::kmeans_default;
use crate::numerics::matrix::Matrix;
use crate::numerics::tape::{kl_divergence, student_t_assign, Neighborhoods, Tape};
use crate::rng::Rng;

/// A view trains a GCN when its missing rate stays at or below the
/// threshold β, a GAT otherwise (boundary inclusive).
pub fn select_encoder(missing_rate: f64, beta: f64) -> EncoderKind {
    if missing_rate <= beta {
        EncoderKind::Gcn
    } else {
        EncoderKind::Gat
    }
}

fn argmax_slice(row: &[f64]) -> usize {
    let mut best = 0usize;
    for (c, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Row-stochastic soft assignment of embeddings to centers (Student-t
/// kernel, degree 1).
pub fn soft_assign(z: &Matrix, centers: &Matrix) -> Result<Matrix> {
    if z.cols() != centers.cols() {
        return Err(Error::shape(format!(
            "soft_assign: embeddings {}x{} vs centers {}x{}",
            z.rows(),
            z.cols(),
            centers.rows(),
            centers.cols()
        )));
    }
    Ok(student_t_assign(z, centers))
}

/// KL(P ‖ Q) over matched rows; both arguments row-stochastic.
pub fn kl_loss(p: &Matrix, q: &Matrix) -> Result<f64> {
    kl_divergence(p, q)
}

/// What a client hands the server after a local round.
#[derive(Debug, Clone)]
pub struct LocalRoundOutcome {
    /// Overlap-row embeddings from the overlap subgraph, canonical order.
    pub z_overlap: Matrix,
    pub recon_loss: f64,
    pub kl_loss: f64,
}

#[derive(Debug, Clone)]
pub struct ClientModel {
    pub view_id: usize,
    pub data: ViewDataset,
    pub encoder: Encoder,
    /// K × d2 trainable cluster centers, initialized after pretraining.
    pub centers: Matrix,
    k: usize,
    kmeans_seed: u64,
    full_prop: Propagation,
    overlap_prop: Propagation,
    full_adjacency: Arc<Matrix>,
    overlap_adjacency: Arc<Matrix>,
    overlap_features: Matrix,
    optimizer: Option<AdamState>,
}

impl ClientModel {
    pub fn new(
        view_id: usize,
        data: ViewDataset,
        k: usize,
        kind: EncoderKind,
        hidden_dims: (usize, usize),
        gcn_output: OutputActivation,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = Rng::substream(seed, &format!("client-{view_id}"));
        let (d1, d2) = hidden_dims;
        let d_in = data.dim();
        let encoder = match kind {
            EncoderKind::Gcn => Encoder::Gcn(GcnEncoder::new(d_in, d1, d2, gcn_output, &mut rng)),
            EncoderKind::Gat => Encoder::Gat(GatEncoder::new(d_in, d1, d2, &mut rng)),
        };
        let kmeans_seed = rng.next_u64();

        let full_prop = Self::propagation(kind, &data.adjacency)?;
        let overlap_adj = data.adjacency.principal_submatrix(&data.overlap_rows);
        let overlap_prop = Self::propagation(kind, &overlap_adj)?;
        let overlap_features = data.features.select_rows(&data.overlap_rows);

        Ok(ClientModel {
            view_id,
            full_adjacency: Arc::new(data.adjacency.clone()),
            overlap_adjacency: Arc::new(overlap_adj),
            overlap_features,
            data,
            encoder,
            centers: Matrix::zeros(k, d2),
            k,
            kmeans_seed,
            full_prop,
            overlap_prop,
            optimizer: None,
        })
    }

    fn propagation(kind: EncoderKind, adjacency: &Matrix) -> Result<Propagation> {
        Ok(match kind {
            EncoderKind::Gcn => Propagation::Gcn(Arc::new(normalize_adjacency(adjacency)?)),
            EncoderKind::Gat => {
                Propagation::Gat(Arc::new(Neighborhoods::from_adjacency(adjacency)?))
            }
        })
    }

    pub fn encoder_kind(&self) -> EncoderKind {
        self.encoder.kind()
    }

    pub fn cluster_count(&self) -> usize {
        self.k
    }

    pub fn overlap_count(&self) -> usize {
        self.data.overlap_rows.len()
    }

    /// Embeddings of all local rows on the full local graph.
    pub fn embed_full(&self) -> Result<Matrix> {
        self.encoder.embed(&self.data.features, &self.full_prop)
    }

    /// Embeddings of the overlap rows on the overlap-induced subgraph.
    pub fn embed_overlap(&self) -> Result<Matrix> {
        self.encoder
            .embed(&self.overlap_features, &self.overlap_prop)
    }

    /// Reconstruction-only training on all local rows, then center
    /// initialization by k-means on the resulting embeddings. Returns the
    /// reconstruction loss at the final parameters.
    pub fn pretrain(&mut self, epochs: usize, lr: f64) -> Result<f64> {
        let pos_w = crate::gnn::positive_weight(&self.full_adjacency);
        let mut adam = AdamState::new(&self.encoder.params(), lr);
        for epoch in 0..epochs {
            let mut tape = Tape::new();
            let x = tape.constant(self.data.features.clone());
            let param_ids = self.encoder.push_params(&mut tape);
            let z = self
                .encoder
                .build_forward(&mut tape, x, &self.full_prop, &param_ids)?;
            let loss = tape.inner_product_bce(z, Arc::clone(&self.full_adjacency), pos_w)?;
            let loss_val = tape.scalar(loss);
            if !loss_val.is_finite() {
                return Err(Error::NonFinite(format!(
                    "pretrain loss diverged (view {}, epoch {epoch})",
                    self.view_id
                )));
            }
            let grads = tape.backward(loss)?;
            let grad_mats: Vec<Matrix> = param_ids
                .iter()
                .zip(self.encoder.params())
                .map(|(id, p)| grads.get(*id, p.shape()))
                .collect();
            let mut params = self.encoder.params_mut();
            adam.step(&mut params, &grad_mats.iter().collect::<Vec<_>>())?;
        }
        for p in self.encoder.params() {
            p.ensure_finite(&format!("pretrained parameters (view {})", self.view_id))?;
        }

        let z = self.embed_full()?;
        z.ensure_finite(&format!("pretrain embeddings (view {})", self.view_id))?;
        let km = kmeans_default(&z, self.k, self.kmeans_seed)?;
        self.centers = km.centers;

        let rec = crate::gnn::decode_adjacency(&z);
        crate::gnn::reconstruction_loss(&self.full_adjacency, &rec)
    }

    /// T Adam epochs on the overlap subgraph minimizing L_r + γ·KL(P‖Q),
    /// training encoder parameters and centers jointly. `pseudo` rows
    /// follow the canonical overlap order.
    pub fn local_train_round(
        &mut self,
        pseudo: &Matrix,
        gamma: f64,
        epochs: usize,
        lr: f64,
    ) -> Result<LocalRoundOutcome> {
        let n_c = self.overlap_count();
        if n_c == 0 {
            return Err(Error::Protocol(format!(
                "view {} has no overlap rows",
                self.view_id
            )));
        }
        if pseudo.rows() != n_c || pseudo.cols() != self.k {
            return Err(Error::Protocol(format!(
                "pseudo-labels are {}x{}, view {} expects {}x{}",
                pseudo.rows(),
                pseudo.cols(),
                self.view_id,
                n_c,
                self.k
            )));
        }
        let pos_w = crate::gnn::positive_weight(&self.overlap_adjacency);
        let pseudo = Arc::new(pseudo.clone());

        // The server's cluster numbering is arbitrary; re-order our
        // centers so the KL pairs each pseudo-label column with the
        // center that currently explains it. Skipped when γ = 0 because
        // the pseudo-labels then play no role.
        if gamma != 0.0 {
            self.align_centers_to(&pseudo)?;
        }

        if self.optimizer.is_none() {
            let mut refs = self.encoder.params();
            refs.push(&self.centers);
            self.optimizer = Some(AdamState::new(&refs, lr));
        }

        for epoch in 0..epochs {
            let mut tape = Tape::new();
            let x = tape.constant(self.overlap_features.clone());
            let mut param_ids = self.encoder.push_params(&mut tape);
            let centers_id = tape.param(self.centers.clone());
            param_ids.push(centers_id);

            let z = self
                .encoder
                .build_forward(&mut tape, x, &self.overlap_prop, &param_ids)?;
            let l_r = tape.inner_product_bce(z, Arc::clone(&self.overlap_adjacency), pos_w)?;
            let total = if gamma != 0.0 {
                let l_c = tape.student_t_kl(z, centers_id, Arc::clone(&pseudo))?;
                tape.add_scaled(l_r, l_c, gamma)?
            } else {
                l_r
            };
            let total_val = tape.scalar(total);
            if !total_val.is_finite() {
                return Err(Error::NonFinite(format!(
                    "local loss diverged (view {}, epoch {epoch})",
                    self.view_id
                )));
            }

            let grads = tape.backward(total)?;
            let shapes: Vec<(usize, usize)> = self
                .encoder
                .params()
                .iter()
                .map(|p| p.shape())
                .chain(std::iter::once(self.centers.shape()))
                .collect();
            let grad_mats: Vec<Matrix> = param_ids
                .iter()
                .zip(shapes)
                .map(|(id, shape)| grads.get(*id, shape))
                .collect();
            let mut params = self.encoder.params_mut();
            params.push(&mut self.centers);
            self.optimizer
                .as_mut()
                .expect("optimizer initialized above")
                .step(&mut params, &grad_mats.iter().collect::<Vec<_>>())?;
        }

        let z_overlap = self.embed_overlap()?;
        z_overlap.ensure_finite(&format!("overlap embeddings (view {})", self.view_id))?;
        let rec = crate::gnn::decode_adjacency(&z_overlap);
        let recon_loss = crate::gnn::reconstruction_loss(&self.overlap_adjacency, &rec)?;
        let q = student_t_assign(&z_overlap, &self.centers);
        let kl = kl_divergence(&pseudo, &q)?;
        Ok(LocalRoundOutcome {
            z_overlap,
            recon_loss,
            kl_loss: kl,
        })
    }

    /// Permutes center rows (and their optimizer moments) so this view's
    /// hard overlap assignments agree with the pseudo-label columns as
    /// much as possible. Ties break toward leaving rows in place.
    fn align_centers_to(&mut self, pseudo: &Matrix) -> Result<()> {
        let z = self.embed_overlap()?;
        let q = student_t_assign(&z, &self.centers);
        let k = self.k;
        let mut cost = Matrix::zeros(k, k);
        for row in 0..q.rows() {
            let mine = argmax_slice(q.row(row));
            let target = argmax_slice(pseudo.row(row));
            cost.set(mine, target, cost.get(mine, target) - 1.0);
        }
        for c in 0..k {
            cost.set(c, c, cost.get(c, c) - 1e-9);
        }
        let perm = crate::numerics::hungarian::hungarian(&cost)?;
        if perm.iter().enumerate().all(|(c, &p)| c == p) {
            return Ok(());
        }
        let mut centers = Matrix::zeros(k, self.centers.cols());
        for (r, &dst) in perm.iter().enumerate() {
            centers.row_mut(dst).copy_from_slice(self.centers.row(r));
        }
        self.centers = centers;
        if let Some(adam) = self.optimizer.as_mut() {
            let centers_param = self.encoder.params().len();
            adam.permute_param_rows(centers_param, &perm);
        }
        Ok(())
    }

    /// Soft assignments of every local row against the current centers,
    /// computed on the full local graph.
    pub fn full_soft_assignments(&self) -> Result<Matrix> {
        let z = self.embed_full()?;
        soft_assign(&z, &self.centers)
    }

    /// Optimizer access for checkpointing.
    pub fn optimizer_state(&self) -> Option<&AdamState> {
        self.optimizer.as_ref()
    }

    pub fn restore_optimizer(&mut self, state: Option<AdamState>) {
        self.optimizer = state;
    }
}
