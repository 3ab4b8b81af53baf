//! Command implementations behind the binary: dataset generation, structural
//! analysis, the training protocol and embedding export.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::blockmodel::{hard_block_matrix, hard_similarity};
use crate::config::RunConfig;
use crate::data::{format_f64, load_dataset, load_params, save_dataset, save_params};
use crate::error::{Error, Result};
use crate::gnn::{
    evaluate, forward_full, train_baseline_gcn, train_baseline_mlp, train_bmgcn, EpochRecord,
    GcnParams, MlpParams, ModelKind, SplitSummary,
};
use crate::graph::{homophily_ratio, stratified_split};
use crate::synth::{planted_homophily, sample_features, sample_sbm, SbmSpec};
use crate::tape::Tape;
use crate::tensor::Tensor;

pub struct GenerateArgs {
    pub out: std::path::PathBuf,
    pub n: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub flip_prob: f64,
    pub seed: u64,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = SbmSpec::uniform(
        args.n,
        args.classes,
        args.p_in,
        args.p_out,
        args.feature_dim,
        args.flip_prob,
        args.seed,
    );
    spec.validate()?;
    let planted = planted_homophily(&spec);
    let (graph, labels) = sample_sbm(&spec)?;
    let features = sample_features(&labels, args.feature_dim, args.flip_prob, spec.seed ^ 0xFEA7)?;
    save_dataset(&args.out, &graph, &labels, &features)?;
    println!("wrote dataset to {}", args.out.display());
    println!("nodes: {}  edges: {}  classes: {}", graph.n(), graph.edge_count(), args.classes);
    match planted {
        Ok(p) => println!("planted homophily: {p:.4}"),
        Err(_) => println!("planted homophily: undefined (a class has expected degree 0)"),
    }
    if graph.edge_count() > 0 {
        println!("empirical homophily: {:.4}", homophily_ratio(&graph, &labels)?);
    } else {
        println!("empirical homophily: undefined (no edges)");
    }
    Ok(())
}

fn print_matrix(name: &str, m: &Tensor) {
    println!("{name}:");
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.6}")).collect();
        println!("  {}", line.join("\t"));
    }
}

pub fn cmd_analyze(dataset: &Path) -> Result<()> {
    let data = load_dataset(dataset)?;
    if data.graph.edge_count() == 0 {
        return Err(Error::Data(format!(
            "{} has an empty edge set; nothing to analyze",
            dataset.display()
        )));
    }
    let h_ratio = homophily_ratio(&data.graph, &data.labels)?;
    println!("nodes: {}", data.n());
    println!("edges: {}", data.graph.edge_count());
    println!("classes: {}", data.num_classes());
    println!("feature_dim: {}", data.feature_dim());
    println!("homophily_ratio: {h_ratio:.6}");
    let h = hard_block_matrix(&data.graph, &data.labels)?;
    print_matrix("block matrix H (ground truth)", &h);
    let q = hard_similarity(&h, 1.0);
    print_matrix("block similarity Q = HH^T", &q);
    Ok(())
}

#[derive(Serialize)]
struct MetricRecord<'a> {
    split: usize,
    model: &'a str,
    #[serde(flatten)]
    record: &'a EpochRecord,
}

#[derive(Serialize)]
struct SummaryRecord {
    dataset: String,
    model: String,
    n_splits: usize,
    mean_acc: f64,
    std_acc: f64,
    config_hash: String,
}

fn write_history(
    out: &mut impl Write,
    split: usize,
    model: &str,
    history: &[EpochRecord],
) -> Result<()> {
    for record in history {
        let rec = MetricRecord { split, model, record };
        serde_json::to_writer(&mut *out, &rec)
            .map_err(|e| Error::Data(format!("metrics serialization failed: {e}")))?;
        writeln!(out)?;
    }
    Ok(())
}

/// Run BM-GCN and both baselines over stratified splits; write per-epoch
/// metrics, per-model summaries and a parameter checkpoint from split 0.
pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    cfg.train.validate()?;
    let dataset = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("train requires `dataset`".into()))?;
    let out_dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("train requires `out`".into()))?;
    if cfg.n_splits == 0 {
        return Err(Error::Config("n_splits must be >= 1".into()));
    }
    let data = load_dataset(dataset)?;
    fs::create_dir_all(out_dir)?;
    let mut metrics = BufWriter::new(fs::File::create(out_dir.join("metrics.jsonl"))?);

    let kinds = [ModelKind::BmGcn, ModelKind::BaselineGcn, ModelKind::BaselineMlp];
    let mut accs: HashMap<&'static str, Vec<f64>> = HashMap::new();
    for s in 0..cfg.n_splits {
        let split = stratified_split(&data.labels, cfg.split_seed + s as u64)?;
        let mut run_cfg = cfg.train.clone();
        run_cfg.seed = crate::gnn::split_run_seed(cfg.train.seed, s);
        for kind in kinds {
            let outcome = match kind {
                ModelKind::BmGcn => {
                    let model = train_bmgcn(&data, &split, &run_cfg)?;
                    if s == 0 {
                        save_params(&out_dir.join("checkpoint.tsv"), &model.named_params())?;
                    }
                    model.outcome
                }
                ModelKind::BaselineGcn => train_baseline_gcn(&data, &split, &run_cfg)?,
                ModelKind::BaselineMlp => train_baseline_mlp(&data, &split, &run_cfg)?,
            };
            write_history(&mut metrics, s, kind.name(), &outcome.history)?;
            accs.entry(kind.name()).or_default().push(outcome.test_acc);
        }
    }
    metrics.flush()?;

    let mut summary = BufWriter::new(fs::File::create(out_dir.join("summary.jsonl"))?);
    let hash = cfg.config_hash();
    for kind in kinds {
        let s: SplitSummary = crate::gnn::summarize(&accs[kind.name()]);
        let record = SummaryRecord {
            dataset: dataset.display().to_string(),
            model: kind.name().to_string(),
            n_splits: cfg.n_splits,
            mean_acc: s.mean,
            std_acc: s.std,
            config_hash: hash.clone(),
        };
        serde_json::to_writer(&mut summary, &record)
            .map_err(|e| Error::Data(format!("summary serialization failed: {e}")))?;
        writeln!(summary)?;
        println!(
            "{}: mean test accuracy {:.4} +/- {:.4} over {} splits",
            kind.name(),
            s.mean,
            s.std,
            cfg.n_splits
        );
    }
    summary.flush()?;
    Ok(())
}

/// Rebuild parameter structs from a named checkpoint dump.
pub fn params_from_checkpoint(
    named: &[(String, Tensor)],
) -> Result<(MlpParams, GcnParams)> {
    let map: HashMap<&str, &Tensor> = named.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let fetch = |name: &str| -> Result<Tensor> {
        map.get(name)
            .map(|&t| t.clone())
            .ok_or_else(|| Error::Data(format!("checkpoint is missing tensor `{name}`")))
    };
    let mlp = MlpParams {
        w1: fetch("mlp.w1")?,
        b1: fetch("mlp.b1")?,
        w2: fetch("mlp.w2")?,
        b2: fetch("mlp.b2")?,
    };
    let mut layers = Vec::new();
    loop {
        let w1 = format!("gcn.{}.w1", layers.len());
        let w2 = format!("gcn.{}.w2", layers.len());
        if !map.contains_key(w1.as_str()) {
            break;
        }
        layers.push((fetch(&w1)?, fetch(&w2)?));
    }
    if layers.is_empty() {
        return Err(Error::Data("checkpoint has no convolutional layers".into()));
    }
    Ok((mlp, GcnParams { layers }))
}

/// Evaluate the checkpointed model and write final-layer embeddings with a
/// trailing label column (unlabeled nodes get -1).
pub fn cmd_export_embeddings(cfg: &RunConfig, checkpoint: &Path, out: &Path) -> Result<()> {
    cfg.train.validate()?;
    let dataset = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("export requires `dataset`".into()))?;
    let data = load_dataset(dataset)?;
    let (mlp, gcn) = params_from_checkpoint(&load_params(checkpoint)?)?;
    let mut cfg_eval = cfg.train.clone();
    cfg_eval.layers = gcn.layers.len();
    // the checkpoint comes from split 0 of the training protocol
    let split = stratified_split(&data.labels, cfg.split_seed)?;
    let mut tape = Tape::new();
    let ff = forward_full(&mut tape, &data, &split, &mlp, &gcn, &cfg_eval, false)?;
    let z = tape.value(ff.z);
    let test_acc = evaluate(z, &data.labels, &split.test)?;

    let mut file = BufWriter::new(fs::File::create(out)?);
    for i in 0..z.rows() {
        let vals: Vec<String> = z.row(i).iter().map(|&v| format_f64(v)).collect();
        let label = data.labels.get(i).map(|l| l as i64).unwrap_or(-1);
        writeln!(file, "{}\t{}", vals.join("\t"), label)?;
    }
    file.flush()?;
    println!(
        "wrote {} embeddings ({} dims) to {}; split-0 test accuracy {:.4}",
        z.rows(),
        z.cols(),
        out.display(),
        test_acc
    );
    Ok(())
}
