//! Demo session: synthetic data generation, a steppable federated run and
//! JSON payloads sized for a canvas. Pure Rust so native tests cover it;
//! the wasm layer in `lib.rs` is a thin wrapper.

use serde::{Deserialize, Serialize};

use fedmvc::dataio::{generate_synthetic, PresenceMask};
use fedmvc::federation::{EncoderPolicy, RunConfig, Simulation};
use fedmvc::metrics::MetricTriple;
use fedmvc::numerics::matrix::{matmul, Matrix};
use fedmvc::server::argmax_rows;
use fedmvc::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct DemoConfig {
    pub n: usize,
    pub k: usize,
    pub dims: Vec<usize>,
    pub separation: f64,
    pub rates: Vec<f64>,
    pub seed: u64,
    pub rounds: usize,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_pretrain_epochs")]
    pub pretrain_epochs: usize,
    #[serde(default = "default_hidden")]
    pub hidden: (usize, usize),
    #[serde(default)]
    pub encoder: PolicyChoice,
}

fn default_local_epochs() -> usize {
    3
}
fn default_beta() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    1.0
}
fn default_pretrain_epochs() -> usize {
    30
}
fn default_hidden() -> (usize, usize) {
    (32, 8)
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    #[default]
    Auto,
    ForceGcn,
    ForceGat,
}

impl From<PolicyChoice> for EncoderPolicy {
    fn from(c: PolicyChoice) -> Self {
        match c {
            PolicyChoice::Auto => EncoderPolicy::Auto,
            PolicyChoice::ForceGcn => EncoderPolicy::ForceGcn,
            PolicyChoice::ForceGat => EncoderPolicy::ForceGat,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ViewPreview {
    pub view_id: usize,
    pub dim: usize,
    pub present: usize,
    pub missing_rate: f64,
    pub encoder: String,
    /// presence flag per global sample, for the occupancy strip
    pub presence: Vec<u8>,
    /// 2-D PCA projection of the retained rows
    pub points: Vec<[f64; 2]>,
    /// true cluster of each retained row
    pub point_labels: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct Preview {
    pub n: usize,
    pub k: usize,
    pub n_overlap: usize,
    pub rounds: usize,
    pub views: Vec<ViewPreview>,
}

#[derive(Debug, Serialize)]
pub struct ClientStep {
    pub view_id: usize,
    pub encoder: String,
    pub recon_loss: f64,
    pub kl_loss: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct StepPayload {
    pub round: usize,
    pub rounds_total: usize,
    pub metrics: Option<MetricTriple>,
    pub clients: Vec<ClientStep>,
    pub view_weights: Vec<f64>,
    pub inertia: f64,
    /// 2-D PCA of the aggregated overlap features
    pub points: Vec<[f64; 2]>,
    /// pseudo-label argmax per overlap row
    pub pseudo_labels: Vec<usize>,
    /// ground-truth cluster per overlap row
    pub true_labels: Vec<usize>,
}

pub struct DemoSession {
    sim: Simulation,
    preview: Preview,
    overlap_true: Vec<usize>,
}

impl DemoSession {
    pub fn from_json(config_json: &str) -> Result<Self> {
        let config: DemoConfig = serde_json::from_str(config_json)?;
        Self::new(&config)
    }

    pub fn new(config: &DemoConfig) -> Result<Self> {
        if config.dims.len() != config.rates.len() {
            return Err(Error::InvalidArgument(format!(
                "{} view dims but {} rates",
                config.dims.len(),
                config.rates.len()
            )));
        }
        let (views, labels) = generate_synthetic(
            config.n,
            config.k,
            &config.dims,
            config.separation,
            config.seed,
        )?;
        let mask = PresenceMask::generate(config.n, &config.rates, config.seed)?;
        let run_config = RunConfig {
            rounds: config.rounds,
            local_epochs: config.local_epochs,
            beta: config.beta,
            gamma: config.gamma,
            k: config.k,
            seed: config.seed,
            pretrain_epochs: config.pretrain_epochs,
            knn_k: 6,
            hidden_dims: config.hidden,
            encoder_policy: config.encoder.into(),
            ..RunConfig::default()
        };
        let sim = Simulation::new("demo", &views, &mask, Some(&labels), run_config)?;

        let mut view_previews = Vec::new();
        for (summary, client) in sim.dataset().views.iter().zip(sim.clients()) {
            let presence: Vec<u8> = mask
                .view(summary.view_id)
                .iter()
                .map(|&p| p as u8)
                .collect();
            let points = pca_2d(&client.data.features);
            let point_labels = client.data.global_ids.iter().map(|&g| labels[g]).collect();
            view_previews.push(ViewPreview {
                view_id: summary.view_id,
                dim: summary.dim,
                present: summary.present,
                missing_rate: summary.missing_rate,
                encoder: summary.encoder.to_string(),
                presence,
                points,
                point_labels,
            });
        }
        let overlap_true: Vec<usize> = sim.overlap_ids().iter().map(|&g| labels[g]).collect();
        let preview = Preview {
            n: config.n,
            k: config.k,
            n_overlap: sim.overlap_ids().len(),
            rounds: config.rounds,
            views: view_previews,
        };
        Ok(DemoSession {
            sim,
            preview,
            overlap_true,
        })
    }

    pub fn preview(&self) -> &Preview {
        &self.preview
    }

    pub fn preview_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.preview)?)
    }

    pub fn completed_rounds(&self) -> usize {
        self.sim.completed_rounds()
    }

    pub fn rounds_total(&self) -> usize {
        self.sim.config().rounds
    }

    pub fn is_done(&self) -> bool {
        self.completed_rounds() >= self.rounds_total()
    }

    pub fn step(&mut self) -> Result<StepPayload> {
        if self.is_done() {
            return Err(Error::Protocol("all rounds already completed".into()));
        }
        let report = self.sim.step_round()?.clone();
        let state = self.sim.global_state().expect("state after a round");
        let payload = StepPayload {
            round: report.round,
            rounds_total: self.rounds_total(),
            metrics: report.metrics,
            clients: report
                .clients
                .iter()
                .zip(self.sim.dataset().views.iter())
                .map(|(c, v)| ClientStep {
                    view_id: c.view_id,
                    encoder: v.encoder.to_string(),
                    recon_loss: c.recon_loss,
                    kl_loss: c.kl_loss,
                })
                .collect(),
            view_weights: report.server.view_weights.clone(),
            inertia: report.server.inertia,
            points: pca_2d(&state.features),
            pseudo_labels: argmax_rows(&state.pseudo),
            true_labels: self.overlap_true.clone(),
        };
        Ok(payload)
    }

    pub fn step_json(&mut self) -> Result<String> {
        Ok(serde_json::to_string(&self.step()?)?)
    }
}

/// First two principal components via power iteration with deflation.
/// Deterministic; falls back to zero coordinates in degenerate directions.
pub fn pca_2d(x: &Matrix) -> Vec<[f64; 2]> {
    let (n, d) = x.shape();
    if n == 0 {
        return Vec::new();
    }
    // center columns
    let mut centered = x.clone();
    for c in 0..d {
        let mean: f64 = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
        for r in 0..n {
            let v = centered.get(r, c) - mean;
            centered.set(r, c, v);
        }
    }
    let cov = matmul(&centered.transpose(), &centered).expect("square covariance");

    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut deflated = cov;
    for comp in 0..2.min(d) {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.01 * ((i + comp) as f64)).collect();
        normalize(&mut v);
        let mut eigenvalue = 0.0;
        for _ in 0..200 {
            let mut next = vec![0.0; d];
            for (r, slot) in next.iter_mut().enumerate() {
                let row = deflated.row(r);
                *slot = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            eigenvalue = norm(&next);
            if eigenvalue <= 1e-12 {
                break;
            }
            for x in next.iter_mut() {
                *x /= eigenvalue;
            }
            v = next;
        }
        // deflate: C ← C − λ v vᵀ
        for r in 0..d {
            for c in 0..d {
                let val = deflated.get(r, c) - eigenvalue * v[r] * v[c];
                deflated.set(r, c, val);
            }
        }
        components.push(v);
    }

    (0..n)
        .map(|r| {
            let row = centered.row(r);
            let mut out = [0.0; 2];
            for (i, comp) in components.iter().enumerate() {
                out[i] = row.iter().zip(comp).map(|(a, b)| a * b).sum();
            }
            out
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}
