use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bmgcn::cli::{cmd_analyze, cmd_export_embeddings, cmd_generate, cmd_train, GenerateArgs};
use bmgcn::config::RunConfig;
use bmgcn::error::Result;

#[derive(Parser)]
#[command(name = "bmgcn", about = "Block-modeling guided graph convolutional networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a stochastic block model dataset and write it to a directory
    Generate {
        /// Output dataset directory
        #[arg(long)]
        out: PathBuf,
        /// Number of nodes
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Number of classes
        #[arg(long, default_value_t = 4)]
        classes: usize,
        /// Within-class edge probability
        #[arg(long, default_value_t = 0.02)]
        p_in: f64,
        /// Cross-class edge probability
        #[arg(long, default_value_t = 0.005)]
        p_out: f64,
        /// Attribute dimension
        #[arg(long, default_value_t = 32)]
        feature_dim: usize,
        /// Per-coordinate flip probability for the class-prototype features
        #[arg(long, default_value_t = 0.2)]
        flip_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print structural statistics of a dataset
    Analyze {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train BM-GCN and both baselines over stratified splits
    Train(TrainFlags),
    /// Write final-layer node embeddings from a trained checkpoint
    ExportEmbeddings {
        #[command(flatten)]
        flags: TrainFlags,
        /// Checkpoint file produced by `train`
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output TSV path
        #[arg(long = "embeddings-out")]
        embeddings_out: PathBuf,
    },
}

/// Flags mirror the config file keys one-to-one; flags override the file.
#[derive(Args)]
struct TrainFlags {
    /// Config file with `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory for metrics, summary and checkpoint
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_splits: Option<usize>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Number of convolutional layers
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Diagonal enhancement of the block similarity matrix
    #[arg(long)]
    alpha: Option<f64>,
    /// Self-loop coefficient in the refined topology
    #[arg(long)]
    beta: Option<f64>,
    /// Loss balance between the convolution and MLP objectives
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    joint_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ablation: detach the soft labels inside the block pipeline
    #[arg(long)]
    stop_gradient: Option<bool>,
}

impl TrainFlags {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                bmgcn::error::Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            cfg.apply_file(&text)?;
        }
        if let Some(v) = &self.dataset {
            cfg.dataset = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.n_splits {
            cfg.n_splits = v;
        }
        if let Some(v) = self.split_seed {
            cfg.split_seed = v;
        }
        if let Some(v) = self.layers {
            cfg.train.layers = v;
        }
        if let Some(v) = self.hidden {
            cfg.train.hidden = v;
        }
        if let Some(v) = self.alpha {
            cfg.train.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.train.beta = v;
        }
        if let Some(v) = self.lambda {
            cfg.train.lambda = v;
        }
        if let Some(v) = self.lr {
            cfg.train.lr = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.train.weight_decay = v;
        }
        if let Some(v) = self.dropout {
            cfg.train.dropout = v;
        }
        if let Some(v) = self.pretrain_epochs {
            cfg.train.pretrain_epochs = v;
        }
        if let Some(v) = self.joint_epochs {
            cfg.train.joint_epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.train.patience = v;
        }
        if let Some(v) = self.seed {
            cfg.train.seed = v;
        }
        if let Some(v) = self.stop_gradient {
            cfg.train.stop_gradient = v;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { out, n, classes, p_in, p_out, feature_dim, flip_prob, seed } => {
            cmd_generate(&GenerateArgs { out, n, classes, p_in, p_out, feature_dim, flip_prob, seed })
        }
        Command::Analyze { dataset } => cmd_analyze(&dataset),
        Command::Train(flags) => cmd_train(&flags.resolve()?),
        Command::ExportEmbeddings { flags, checkpoint, embeddings_out } => {
            cmd_export_embeddings(&flags.resolve()?, &checkpoint, &embeddings_out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
