use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use fedmvc::dataio::{
    generate_synthetic, load_labels, save_labels, save_matrix, Manifest, PresenceMask, ViewEntry,
};
use fedmvc::federation::checkpoint::save_checkpoint;
use fedmvc::federation::report::{write_report, write_trace};
use fedmvc::federation::{EncoderPolicy, RunConfig, Simulation};
use fedmvc::gnn::OutputActivation;
use fedmvc::metrics::{self, MetricTriple, NmiNorm};
use fedmvc::{Error, Result};

use crate::args::{parse_dims_pair, parse_f64_list, parse_seeds, parse_usize_list};

#[derive(Clone, Copy, ValueEnum)]
pub enum EncoderChoice {
    Auto,
    ForceGcn,
    ForceGat,
}

impl From<EncoderChoice> for EncoderPolicy {
    fn from(c: EncoderChoice) -> Self {
        match c {
            EncoderChoice::Auto => EncoderPolicy::Auto,
            EncoderChoice::ForceGcn => EncoderPolicy::ForceGcn,
            EncoderChoice::ForceGat => EncoderPolicy::ForceGat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GcnOutputChoice {
    Linear,
    Softmax,
}

impl From<GcnOutputChoice> for OutputActivation {
    fn from(c: GcnOutputChoice) -> Self {
        match c {
            GcnOutputChoice::Linear => OutputActivation::Linear,
            GcnOutputChoice::Softmax => OutputActivation::Softmax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum NmiNormChoice {
    Sqrt,
    Mean,
}

impl From<NmiNormChoice> for NmiNorm {
    fn from(c: NmiNormChoice) -> Self {
        match c {
            NmiNormChoice::Sqrt => NmiNorm::Sqrt,
            NmiNormChoice::Mean => NmiNorm::ArithmeticMean,
        }
    }
}

// ---------------------------------------------------------------- synth

#[derive(Args)]
pub struct SynthArgs {
    /// Samples.
    #[arg(long)]
    pub n: usize,
    /// Clusters.
    #[arg(long)]
    pub k: usize,
    /// Per-view feature dimensions, e.g. "32,24,16".
    #[arg(long)]
    pub dims: String,
    /// Inter-center distance in within-cluster standard deviations.
    #[arg(long, default_value_t = 6.0)]
    pub sep: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for matrices, labels and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "synthetic")]
    pub name: String,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let dims = parse_usize_list(&args.dims)?;
    let (views, labels) = generate_synthetic(args.n, args.k, &dims, args.sep, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let mut entries = Vec::new();
    for (id, view) in views.iter().enumerate() {
        let file = format!("view_{id}.fvm");
        save_matrix(&args.out.join(&file), view)?;
        entries.push(ViewEntry {
            id,
            path: file,
            dim: view.cols(),
        });
    }
    save_labels(&args.out.join("labels.csv"), &labels)?;
    let manifest = Manifest {
        name: args.name,
        n_samples: args.n,
        n_clusters: args.k,
        views: entries,
        labels_path: Some("labels.csv".into()),
        masks_path: None,
    };
    manifest.save(&args.out.join("manifest.json"))?;
    println!(
        "wrote {} views + labels + manifest to {}",
        views.len(),
        args.out.display()
    );
    Ok(())
}

// ----------------------------------------------------------------- mask

#[derive(Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Per-view missing rates, e.g. "0.2,0.2,0.1".
    #[arg(long)]
    pub rates: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mask(args: MaskArgs) -> Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let rates = parse_f64_list(&args.rates)?;
    if rates.len() != manifest.views.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rates for {} views",
            rates.len(),
            manifest.views.len()
        )));
    }
    let mask = PresenceMask::generate(manifest.n_samples, &rates, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    mask.save_csv(&args.out)?;
    let sizes: Vec<usize> = (0..mask.n_views()).map(|i| mask.present_count(i)).collect();
    println!(
        "wrote mask for {} samples, per-view sizes {:?}, overlap {}",
        manifest.n_samples,
        sizes,
        mask.overlap_ids().len()
    );
    Ok(())
}

// ------------------------------------------------------------------ run

#[derive(Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Presence-mask CSV; overrides --rates and the manifest's mask.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Per-view missing rates; a fresh mask is generated per run seed.
    #[arg(long)]
    pub rates: Option<String>,
    /// Communication rounds E (round 1 pretrains).
    #[arg(long = "e-rounds", default_value_t = 10)]
    pub e_rounds: usize,
    /// Local epochs T per federated round.
    #[arg(long = "t-epochs", default_value_t = 3)]
    pub t_epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = EncoderChoice::Auto)]
    pub encoder: EncoderChoice,
    #[arg(long = "gcn-output", value_enum, default_value_t = GcnOutputChoice::Linear)]
    pub gcn_output: GcnOutputChoice,
    /// Seeds: "0,1,2" or an inclusive range "0..4".
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Encoder layer widths "d1,d2" (default 128,16).
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long = "knn-k", default_value_t = 10)]
    pub knn_k: usize,
    #[arg(long = "pretrain-epochs", default_value_t = 50)]
    pub pretrain_epochs: usize,
    #[arg(long = "pretrain-lr", default_value_t = 0.005)]
    pub pretrain_lr: f64,
    #[arg(long = "train-lr", default_value_t = 0.001)]
    pub train_lr: f64,
    #[arg(long = "nmi-norm", value_enum, default_value_t = NmiNormChoice::Sqrt)]
    pub nmi_norm: NmiNormChoice,
    /// Save a checkpoint directory after every round.
    #[arg(long, default_value_t = false)]
    pub checkpoint: bool,
}

struct LoadedDataset {
    name: String,
    views: Vec<fedmvc::Matrix>,
    labels: Option<Vec<usize>>,
    manifest: Manifest,
    base: PathBuf,
}

fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let views = manifest.load_views(&base)?;
    let labels = manifest.load_label_vec(&base)?;
    Ok(LoadedDataset {
        name: manifest.name.clone(),
        views,
        labels,
        manifest,
        base,
    })
}

fn resolve_mask(args: &RunArgs, data: &LoadedDataset, seed: u64) -> Result<PresenceMask> {
    if let Some(path) = &args.masks {
        return PresenceMask::load_csv(path);
    }
    if let Some(rates) = &args.rates {
        let rates = parse_f64_list(rates)?;
        if rates.len() != data.views.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rates for {} views",
                rates.len(),
                data.views.len()
            )));
        }
        return PresenceMask::generate(data.manifest.n_samples, &rates, seed);
    }
    if let Some(path) = data.manifest.resolve_masks_path(&data.base) {
        return PresenceMask::load_csv(&path);
    }
    Ok(PresenceMask::complete(
        data.views.len(),
        data.manifest.n_samples,
    ))
}

fn build_config(args: &RunArgs, k: usize, seed: u64) -> Result<RunConfig> {
    let hidden_dims = match &args.dims {
        Some(s) => parse_dims_pair(s)?,
        None => (128, 16),
    };
    Ok(RunConfig {
        rounds: args.e_rounds,
        local_epochs: args.t_epochs,
        beta: args.beta,
        gamma: args.gamma,
        k,
        seed,
        pretrain_epochs: args.pretrain_epochs,
        pretrain_lr: args.pretrain_lr,
        train_lr: args.train_lr,
        knn_k: args.knn_k,
        hidden_dims,
        encoder_policy: args.encoder.into(),
        gcn_output: args.gcn_output.into(),
        nmi_norm: args.nmi_norm.into(),
        threads: args.threads,
    })
}

#[derive(Serialize)]
struct SeedTimings {
    total_s: f64,
    round_s: Vec<f64>,
}

pub struct SeedOutcome {
    pub seed: u64,
    pub final_metrics: Option<MetricTriple>,
}

/// Runs one seed end to end, writing all artifacts under `out`.
fn run_seed(args: &RunArgs, data: &LoadedDataset, seed: u64, out: &Path) -> Result<SeedOutcome> {
    let mask = resolve_mask(args, data, seed)?;
    let config = build_config(args, data.manifest.n_clusters, seed)?;
    let mut sim = Simulation::new(
        &data.name,
        &data.views,
        &mask,
        data.labels.as_deref(),
        config,
    )?;

    let emb_dir = out.join("embeddings");
    std::fs::create_dir_all(&emb_dir)?;
    let start = Instant::now();
    let mut round_s = Vec::new();
    while sim.completed_rounds() < sim.config().rounds {
        let t = Instant::now();
        sim.step_round()?;
        round_s.push(t.elapsed().as_secs_f64());
        let round = sim.completed_rounds();
        let state = sim.global_state().expect("state after a round");
        save_matrix(
            &emb_dir.join(format!("seed{seed}_round{round}.fvm")),
            &state.features,
        )?;
        if args.checkpoint {
            save_checkpoint(
                &sim,
                &out.join(format!("checkpoints/seed{seed}/round{round}")),
            )?;
        }
    }
    let final_labels = sim.final_prediction()?;
    let report = sim.report();

    write_report(&out.join(format!("report_seed{seed}.json")), &report)?;
    write_trace(&out.join(format!("trace_seed{seed}.jsonl")), sim.trace())?;
    save_labels(&out.join(format!("labels_seed{seed}.csv")), &final_labels)?;
    let timings = SeedTimings {
        total_s: start.elapsed().as_secs_f64(),
        round_s,
    };
    std::fs::write(
        out.join(format!("timings_seed{seed}.json")),
        serde_json::to_string_pretty(&timings)? + "\n",
    )?;

    Ok(SeedOutcome {
        seed,
        final_metrics: report.final_metrics,
    })
}

#[derive(Serialize)]
struct Aggregate {
    seeds: Vec<u64>,
    acc: Option<Stat>,
    nmi: Option<Stat>,
    ari: Option<Stat>,
}

#[derive(Serialize)]
struct Stat {
    mean: f64,
    std: f64,
    values: Vec<f64>,
}

fn stat(values: Vec<f64>) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stat {
        mean,
        std: var.sqrt(),
        values,
    }
}

fn aggregate(outcomes: &[SeedOutcome]) -> Aggregate {
    let seeds = outcomes.iter().map(|o| o.seed).collect();
    let collect = |f: fn(&MetricTriple) -> f64| -> Option<Stat> {
        let values: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.final_metrics.map(|m| f(&m)))
            .collect();
        (values.len() == outcomes.len() && !values.is_empty()).then(|| stat(values))
    };
    Aggregate {
        seeds,
        acc: collect(|m| m.acc),
        nmi: collect(|m| m.nmi),
        ari: collect(|m| m.ari),
    }
}

pub fn run(args: RunArgs) -> Result<()> {
    let data = load_dataset(&args.manifest)?;
    let seeds = parse_seeds(&args.seeds)?;
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    std::fs::create_dir_all(&args.out)?;
    let mut outcomes = Vec::new();
    for &seed in &seeds {
        let outcome = run_seed(&args, &data, seed, &args.out)?;
        match &outcome.final_metrics {
            Some(m) => println!(
                "seed {seed}: acc {:.4}  nmi {:.4}  ari {:.4}",
                m.acc, m.nmi, m.ari
            ),
            None => println!("seed {seed}: done (no labels, no metrics)"),
        }
        outcomes.push(outcome);
    }
    let agg = aggregate(&outcomes);
    std::fs::write(
        args.out.join("aggregate.json"),
        serde_json::to_string_pretty(&agg)? + "\n",
    )?;
    if let Some(acc) = &agg.acc {
        println!(
            "mean over {} seeds: acc {:.4} ± {:.4}",
            outcomes.len(),
            acc.mean,
            acc.std
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- sweep

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Hyperparameter to sweep.
    #[arg(long, value_parser = ["beta", "gamma"])]
    pub param: String,
    /// Grid values, e.g. "0.05,0.1,0.15" or "1e-3,1e-2,1e-1,1,1e1,1e2,1e3".
    #[arg(long)]
    pub values: String,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let values = parse_f64_list(&args.values)?;
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one value".into(),
        ));
    }
    let data = load_dataset(&args.run.manifest)?;
    if data.labels.is_none() {
        return Err(Error::InvalidArgument(
            "sweep needs ground-truth labels in the manifest".into(),
        ));
    }
    let seeds = parse_seeds(&args.run.seeds)?;
    std::fs::create_dir_all(&args.run.out)?;

    let mut csv = String::from("param,value,seed,acc,nmi,ari\n");
    for &value in &values {
        let mut run_args = args.run.clone();
        match args.param.as_str() {
            "beta" => run_args.beta = value,
            "gamma" => run_args.gamma = value,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep parameter {other:?}"
                )))
            }
        }
        let sub = args.run.out.join(format!("{}_{value}", args.param));
        std::fs::create_dir_all(&sub)?;
        for &seed in &seeds {
            let outcome = run_seed(&run_args, &data, seed, &sub)?;
            let m = outcome.final_metrics.expect("labels checked above");
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                args.param, value, seed, m.acc, m.nmi, m.ari
            ));
            println!("{} = {value}, seed {seed}: acc {:.4}", args.param, m.acc);
        }
    }
    std::fs::write(args.run.out.join("sweep.csv"), csv)?;
    println!("wrote {}", args.run.out.join("sweep.csv").display());
    Ok(())
}

// ----------------------------------------------------------------- eval

#[derive(Args)]
pub struct EvalArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub truth: PathBuf,
    /// Optional JSON output path (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "nmi-norm", value_enum, default_value_t = NmiNormChoice::Sqrt)]
    pub nmi_norm: NmiNormChoice,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let pred = load_labels(&args.pred)?;
    let truth = load_labels(&args.truth)?;
    if pred.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "label files differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let mut out = BTreeMap::new();
    out.insert("acc", metrics::acc(&truth, &pred)?);
    out.insert("nmi", metrics::nmi(&truth, &pred, args.nmi_norm.into())?);
    out.insert("ari", metrics::ari(&truth, &pred)?);
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
