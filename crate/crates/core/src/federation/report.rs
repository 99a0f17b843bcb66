//! Run reports and the protocol trace.
//!
//! `report.json` is fully deterministic for a given configuration and
//! seed: field order is fixed by the struct definitions and no timestamps
//! or timings are included (wall-clock measurements go to a separate,
//! explicitly non-reproducible sidecar).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gnn::EncoderKind;
use crate::metrics::MetricTriple;

use super::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewSummary {
    pub view_id: usize,
    pub dim: usize,
    pub present: usize,
    pub missing_rate: f64,
    pub encoder: EncoderKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_samples: usize,
    pub n_clusters: usize,
    pub n_views: usize,
    pub n_overlap: usize,
    pub views: Vec<ViewSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientRoundReport {
    pub view_id: usize,
    pub recon_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_loss: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerRoundReport {
    pub inertia: f64,
    pub view_weights: Vec<f64>,
    pub perm: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub clients: Vec<ClientRoundReport>,
    pub server: ServerRoundReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricTriple>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub dataset: DatasetSummary,
    pub config: RunConfig,
    pub seed: u64,
    pub rounds: Vec<RoundReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_metrics: Option<MetricTriple>,
}

/// One protocol message (or the initial per-client setup record).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub direction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub shapes: BTreeMap<String, (usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<Vec<usize>>,
}

impl TraceRecord {
    pub fn setup(view_id: usize, encoder: EncoderKind, missing_rate: f64) -> Self {
        TraceRecord {
            round: 0,
            direction: "setup".into(),
            view_id: Some(view_id),
            encoder: Some(encoder),
            missing_rate: Some(missing_rate),
            shapes: BTreeMap::new(),
            recon_loss: None,
            kl_loss: None,
            perm: None,
        }
    }
}

pub fn write_report(path: &Path, report: &MetricsReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// JSON-lines, one record per message.
pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut out = String::new();
    for record in trace {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
