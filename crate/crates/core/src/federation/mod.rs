//! Protocol orchestration: pretraining, E communication rounds of
//! parallel local training → upload → aggregation → pseudo-label
//! broadcast, and the final fused prediction.
//!
//! The whole run is deterministic given its configuration: every client
//! draws from a substream keyed by its view id, the server reduces
//! uploads in ascending view-id order, and the thread count changes only
//! the schedule, never a result.

pub mod checkpoint;
pub mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::client::{select_encoder, ClientModel};
use crate::dataio::{PresenceMask, ViewDataset};
use crate::error::{Error, Result};
use crate::gnn::{EncoderKind, OutputActivation};
use crate::metrics::{self, NmiNorm};
use crate::numerics::hungarian::hungarian;
use crate::numerics::matrix::Matrix;
use crate::rng::Rng;
use crate::server::{argmax_rows, server_step, GlobalState};

pub use report::{
    ClientRoundReport, DatasetSummary, MetricsReport, RoundReport, ServerRoundReport, TraceRecord,
    ViewSummary, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderPolicy {
    /// GCN when the view's missing rate is at most β, GAT otherwise.
    #[default]
    Auto,
    ForceGcn,
    ForceGat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Communication rounds E (round 1 is pretraining).
    pub rounds: usize,
    /// Local epochs T per federated round.
    pub local_epochs: usize,
    /// Encoder-selection threshold β.
    pub beta: f64,
    /// Weight γ of the clustering loss in L = L_r + γ·L_c.
    pub gamma: f64,
    /// Cluster count K.
    pub k: usize,
    pub seed: u64,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub train_lr: f64,
    /// Neighbors per node in the local kNN graphs.
    pub knn_k: usize,
    /// Hidden and embedding widths of both encoder architectures.
    pub hidden_dims: (usize, usize),
    pub encoder_policy: EncoderPolicy,
    pub gcn_output: OutputActivation,
    pub nmi_norm: NmiNorm,
    /// Client threads; results are identical for any value.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rounds: 10,
            local_epochs: 3,
            beta: 0.1,
            gamma: 1.0,
            k: 2,
            seed: 0,
            pretrain_epochs: 50,
            pretrain_lr: 0.005,
            train_lr: 0.001,
            knn_k: 10,
            hidden_dims: (128, 16),
            encoder_policy: EncoderPolicy::Auto,
            gcn_output: OutputActivation::Linear,
            nmi_norm: NmiNorm::Sqrt,
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if self.local_epochs < 1 {
            return Err(Error::invalid("local_epochs must be at least 1"));
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid("gamma must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid("beta must be in [0,1)"));
        }
        if self.k < 2 {
            return Err(Error::invalid("k must be at least 2"));
        }
        if self.hidden_dims.0 == 0 || self.hidden_dims.1 == 0 {
            return Err(Error::invalid("hidden dims must be positive"));
        }
        if self.knn_k == 0 {
            return Err(Error::invalid("knn_k must be at least 1"));
        }
        Ok(())
    }
}

/// Message a client uploads after its local round.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub view_id: usize,
    pub overlap_digest: u64,
    pub z_overlap: Matrix,
    pub centers: Matrix,
    pub recon_loss: f64,
    pub kl_loss: Option<f64>,
}

/// Message the server broadcasts after aggregation.
#[derive(Debug, Clone)]
pub struct ServerBroadcast {
    pub round: usize,
    pub pseudo: Matrix,
    pub perm: Vec<usize>,
}

fn digest_ids(ids: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &id in ids {
        for b in (id as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// A steppable federated run.
#[derive(Debug)]
pub struct Simulation {
    clients: Vec<ClientModel>,
    config: RunConfig,
    labels: Option<Vec<usize>>,
    mask: PresenceMask,
    overlap_ids: Vec<usize>,
    overlap_digest: u64,
    state: Option<GlobalState>,
    completed_rounds: usize,
    trace: Vec<TraceRecord>,
    rounds: Vec<RoundReport>,
    dataset: DatasetSummary,
    /// Experiment hook: rounds whose k-means output gets its cluster
    /// indices permuted before sharpening/alignment. Used to demonstrate
    /// (and test) that alignment makes cluster numbering irrelevant.
    center_relabels: Vec<(usize, Vec<usize>)>,
}

impl Simulation {
    pub fn new(
        name: &str,
        views: &[Matrix],
        mask: &PresenceMask,
        labels: Option<&[usize]>,
        config: RunConfig,
    ) -> Result<Self> {
        config.validate()?;
        if views.is_empty() || views.len() != mask.n_views() {
            return Err(Error::invalid(format!(
                "{} views supplied, mask covers {}",
                views.len(),
                mask.n_views()
            )));
        }
        let n = mask.n_samples();
        for (i, v) in views.iter().enumerate() {
            if v.rows() != n {
                return Err(Error::shape(format!(
                    "view {i} has {} rows, expected {n}",
                    v.rows()
                )));
            }
        }
        if let Some(l) = labels {
            if l.len() != n {
                return Err(Error::shape(format!("{} labels for {n} samples", l.len())));
            }
        }
        mask.validate_coverage()?;
        let overlap_ids = mask.overlap_ids();
        if overlap_ids.is_empty() {
            return Err(Error::Protocol(
                "no sample is present in every view; aggregation is impossible".into(),
            ));
        }
        if overlap_ids.len() < config.k {
            return Err(Error::Protocol(format!(
                "{} overlap samples cannot support {} clusters",
                overlap_ids.len(),
                config.k
            )));
        }

        let mut clients = Vec::with_capacity(views.len());
        let mut summaries = Vec::with_capacity(views.len());
        let mut trace = Vec::new();
        for (view_id, view) in views.iter().enumerate() {
            let rate = mask.missing_rate(view_id);
            let kind = match config.encoder_policy {
                EncoderPolicy::Auto => select_encoder(rate, config.beta),
                EncoderPolicy::ForceGcn => EncoderKind::Gcn,
                EncoderPolicy::ForceGat => EncoderKind::Gat,
            };
            let data = ViewDataset::build(view, mask, view_id, config.knn_k)?;
            summaries.push(ViewSummary {
                view_id,
                dim: data.dim(),
                present: data.local_rows(),
                missing_rate: rate,
                encoder: kind,
            });
            trace.push(TraceRecord::setup(view_id, kind, rate));
            clients.push(ClientModel::new(
                view_id,
                data,
                config.k,
                kind,
                config.hidden_dims,
                config.gcn_output,
                config.seed,
            )?);
        }

        let dataset = DatasetSummary {
            name: name.to_string(),
            n_samples: n,
            n_clusters: config.k,
            n_views: views.len(),
            n_overlap: overlap_ids.len(),
            views: summaries,
        };
        Ok(Simulation {
            overlap_digest: digest_ids(&overlap_ids),
            clients,
            config,
            labels: labels.map(<[usize]>::to_vec),
            mask: mask.clone(),
            overlap_ids,
            state: None,
            completed_rounds: 0,
            trace,
            rounds: Vec::new(),
            dataset,
            center_relabels: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn dataset(&self) -> &DatasetSummary {
        &self.dataset
    }

    pub fn completed_rounds(&self) -> usize {
        self.completed_rounds
    }

    pub fn global_state(&self) -> Option<&GlobalState> {
        self.state.as_ref()
    }

    pub fn clients(&self) -> &[ClientModel] {
        &self.clients
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn round_reports(&self) -> &[RoundReport] {
        &self.rounds
    }

    /// Registers a cluster-index permutation to apply to the named
    /// round's k-means output (see `center_relabels`).
    pub fn inject_center_permutation(&mut self, round: usize, perm: Vec<usize>) {
        self.center_relabels.push((round, perm));
    }

    /// Runs the next communication round: pretraining in round 1, local
    /// federated training afterwards, each followed by the server step.
    pub fn step_round(&mut self) -> Result<&RoundReport> {
        let round = self.completed_rounds + 1;
        let threads = self.config.threads.max(1);

        let updates: Vec<ClientUpdate> = if round == 1 {
            let epochs = self.config.pretrain_epochs;
            let lr = self.config.pretrain_lr;
            let digest = self.overlap_digest;
            run_clients(&mut self.clients, threads, move |client| {
                let recon_loss = client.pretrain(epochs, lr)?;
                Ok(ClientUpdate {
                    view_id: client.view_id,
                    overlap_digest: digest,
                    z_overlap: client.embed_overlap()?,
                    centers: client.centers.clone(),
                    recon_loss,
                    kl_loss: None,
                })
            })?
        } else {
            let state = self
                .state
                .as_ref()
                .expect("server state exists after round 1");
            let pseudo = state.pseudo.clone();
            let gamma = self.config.gamma;
            let epochs = self.config.local_epochs;
            let lr = self.config.train_lr;
            let digest = self.overlap_digest;
            run_clients(&mut self.clients, threads, move |client| {
                let outcome = client.local_train_round(&pseudo, gamma, epochs, lr)?;
                Ok(ClientUpdate {
                    view_id: client.view_id,
                    overlap_digest: digest,
                    z_overlap: outcome.z_overlap,
                    centers: client.centers.clone(),
                    recon_loss: outcome.recon_loss,
                    kl_loss: Some(outcome.kl_loss),
                })
            })?
        };

        // uploads reduce in ascending view-id order regardless of schedule
        debug_assert!(updates.windows(2).all(|w| w[0].view_id < w[1].view_id));
        for u in &updates {
            if u.overlap_digest != self.overlap_digest {
                return Err(Error::Protocol(format!(
                    "view {} disagrees on the overlap row order",
                    u.view_id
                )));
            }
            let mut shapes = BTreeMap::new();
            shapes.insert("z".to_string(), u.z_overlap.shape());
            shapes.insert("u".to_string(), u.centers.shape());
            self.trace.push(TraceRecord {
                round,
                direction: "upload".into(),
                view_id: Some(u.view_id),
                encoder: None,
                missing_rate: None,
                shapes,
                recon_loss: Some(u.recon_loss),
                kl_loss: u.kl_loss,
                perm: None,
            });
        }

        let z_list: Vec<&Matrix> = updates.iter().map(|u| &u.z_overlap).collect();
        let u_list: Vec<&Matrix> = updates.iter().map(|u| &u.centers).collect();
        let server_seed =
            Rng::substream(self.config.seed, &format!("server-round-{round}")).state();
        let relabel = self
            .center_relabels
            .iter()
            .find(|(r, _)| *r == round)
            .map(|(_, p)| p.as_slice());
        let prev_hard = self.state.as_ref().map(|s| s.hard.clone());
        let (state, weights, inertia) = server_step(
            &z_list,
            &u_list,
            self.config.k,
            server_seed,
            prev_hard.as_deref(),
            round,
            relabel,
        )?;

        let broadcast = ServerBroadcast {
            round,
            pseudo: state.pseudo.clone(),
            perm: state.perm.clone(),
        };
        let mut shapes = BTreeMap::new();
        shapes.insert("p".to_string(), broadcast.pseudo.shape());
        self.trace.push(TraceRecord {
            round,
            direction: "broadcast".into(),
            view_id: None,
            encoder: None,
            missing_rate: None,
            shapes,
            recon_loss: None,
            kl_loss: None,
            perm: Some(broadcast.perm.clone()),
        });

        self.state = Some(state);
        self.completed_rounds = round;

        let metrics = match &self.labels {
            Some(truth) => {
                let predicted = self.final_prediction()?;
                Some(metrics::MetricTriple {
                    acc: metrics::acc(truth, &predicted)?,
                    nmi: metrics::nmi(truth, &predicted, self.config.nmi_norm)?,
                    ari: metrics::ari(truth, &predicted)?,
                })
            }
            None => None,
        };
        self.rounds.push(RoundReport {
            round,
            clients: updates
                .iter()
                .map(|u| ClientRoundReport {
                    view_id: u.view_id,
                    recon_loss: u.recon_loss,
                    kl_loss: u.kl_loss,
                })
                .collect(),
            server: ServerRoundReport {
                inertia,
                view_weights: weights,
                perm: broadcast.perm,
            },
            metrics,
        });
        Ok(self.rounds.last().expect("just pushed"))
    }

    /// Fused prediction over all N samples: each view's soft assignments
    /// are mapped into the global label space (Hungarian match of its
    /// overlap hard labels against the pseudo-labels), averaged over the
    /// views where the sample is present, then argmaxed.
    pub fn final_prediction(&self) -> Result<Vec<usize>> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Protocol("no completed round to predict from".into()))?;
        let k = self.config.k;
        let n = self.mask.n_samples();
        let mut scores = Matrix::zeros(n, k);
        let mut present = vec![0usize; n];

        for client in &self.clients {
            let q = client.full_soft_assignments()?;
            let overlap_hard: Vec<usize> = client
                .data
                .overlap_rows
                .iter()
                .map(|&row| {
                    let r = q.row(row);
                    let mut best = 0usize;
                    for (c, &v) in r.iter().enumerate() {
                        if v > r[best] {
                            best = c;
                        }
                    }
                    best
                })
                .collect();
            // map this view's cluster indices onto the global labeling
            let mut cost = Matrix::zeros(k, k);
            for (&mine, &global) in overlap_hard.iter().zip(&state.hard) {
                cost.set(mine, global, cost.get(mine, global) - 1.0);
            }
            for c in 0..k {
                cost.set(c, c, cost.get(c, c) - 1e-9);
            }
            let perm = hungarian(&cost)?;

            for (local, &gid) in client.data.global_ids.iter().enumerate() {
                present[gid] += 1;
                let qrow = q.row(local);
                let srow = scores.row_mut(gid);
                for (c, &v) in qrow.iter().enumerate() {
                    srow[perm[c]] += v;
                }
            }
        }

        let mut labels = Vec::with_capacity(n);
        for (j, &count) in present.iter().enumerate() {
            if count == 0 {
                return Err(Error::Protocol(format!("sample {j} is present in no view")));
            }
            labels.push(fused_label(scores.row(j), count));
        }
        Ok(labels)
    }

    pub fn run_all(&mut self) -> Result<()> {
        while self.completed_rounds < self.config.rounds {
            self.step_round()?;
        }
        Ok(())
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            schema_version: SCHEMA_VERSION,
            dataset: self.dataset.clone(),
            config: self.config.clone(),
            seed: self.config.seed,
            rounds: self.rounds.clone(),
            final_metrics: self.rounds.last().and_then(|r| r.metrics),
        }
    }

    /// Canonical overlap sample ids (ascending), shared by all clients.
    pub fn overlap_ids(&self) -> &[usize] {
        &self.overlap_ids
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
}

/// Runs one closure per client, `threads` at a time, collecting results
/// in client order so scheduling never affects output.
fn run_clients<T: Send>(
    clients: &mut [ClientModel],
    threads: usize,
    f: impl Fn(&mut ClientModel) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if threads <= 1 {
        return clients.iter_mut().map(&f).collect();
    }
    let mut out: Vec<Result<T>> = Vec::with_capacity(clients.len());
    for chunk in clients.chunks_mut(threads) {
        let chunk_results: Vec<Result<T>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter_mut()
                .map(|client| {
                    let f = &f;
                    scope.spawn(move || f(client))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("client thread panicked"))
                .collect()
        });
        out.extend(chunk_results);
    }
    out.into_iter().collect()
}

/// Output of a complete run.
pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Vec<TraceRecord>,
    pub final_labels: Vec<usize>,
    /// Global aggregated features per round, for embedding dumps.
    pub round_features: Vec<Matrix>,
    /// Wall-clock seconds per phase; never part of report.json.
    pub timings: BTreeMap<String, f64>,
}

/// Convenience wrapper: build a simulation, run all E rounds, collect
/// everything.
pub fn run(
    name: &str,
    views: &[Matrix],
    mask: &PresenceMask,
    labels: Option<&[usize]>,
    config: RunConfig,
) -> Result<RunOutput> {
    let mut sim = Simulation::new(name, views, mask, labels, config)?;
    let mut round_features = Vec::with_capacity(sim.config.rounds);
    let mut timings = BTreeMap::new();

    let t0 = Instant::now();
    sim.step_round()?;
    round_features.push(
        sim.state
            .as_ref()
            .expect("state after round 1")
            .features
            .clone(),
    );
    timings.insert("pretrain_round_s".to_string(), t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    while sim.completed_rounds < sim.config.rounds {
        sim.step_round()?;
        round_features.push(sim.state.as_ref().expect("state").features.clone());
    }
    timings.insert("federated_rounds_s".to_string(), t1.elapsed().as_secs_f64());

    let t2 = Instant::now();
    let final_labels = sim.final_prediction()?;
    timings.insert("finalize_s".to_string(), t2.elapsed().as_secs_f64());

    Ok(RunOutput {
        report: sim.report(),
        trace: sim.trace.clone(),
        final_labels,
        round_features,
        timings,
    })
}

/// Hard labels from the pseudo-label matrix rows (overlap order).
pub fn pseudo_hard_labels(state: &GlobalState) -> Vec<usize> {
    argmax_rows(&state.pseudo)
}

/// Label of one sample from the summed soft votes of its `present`
/// views: average over those views, argmax, ties to the lowest index.
pub fn fused_label(summed_votes: &[f64], present: usize) -> usize {
    debug_assert!(present > 0);
    let inv = 1.0 / present as f64;
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for (c, &v) in summed_votes.iter().enumerate() {
        let avg = v * inv;
        if avg > best_v {
            best_v = avg;
            best = c;
        }
    }
    best
}
