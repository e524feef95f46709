use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coco_core::pipeline::{ConfigError, PipelineConfig};

mod commands;

/// Entity-centric counterfactual data augmentation for relation classification.
#[derive(Parser, Debug)]
#[command(name = "coco", version)]
struct Cli {
    /// Log level (error, warn, info, debug, trace); `RUST_LOG` also works.
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a corpus, check every sample and print a summary.
    IngestValidate {
        corpus: PathBuf,
    },
    /// Per-token centralities for every sample, as JSONL.
    Centrality {
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "syn")]
        layer: LayerArg,
        #[arg(long, default_value = "mean")]
        agg: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train the built-in linear classifier.
    TrainClassifier {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        vectors: VectorArgs,
    },
    /// Label a corpus with a trained model, one {"id","label","scores"} line per sample.
    Predict {
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        vectors: VectorArgs,
    },
    /// Syntactic counterfactuals.
    Synco {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        synco: SynCoArgs,
        #[command(flatten)]
        generation: GenArgs,
        #[command(flatten)]
        verify: VerifyArgs,
        #[command(flatten)]
        vectors: VectorArgs,
    },
    /// Semantic counterfactuals.
    Semco {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        semco: SemCoArgs,
        #[command(flatten)]
        generation: GenArgs,
        #[command(flatten)]
        verify: VerifyArgs,
        #[command(flatten)]
        vectors: VectorArgs,
    },
    /// SynCo followed by SemCo, de-duplicated.
    Generate {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        synco: SynCoArgs,
        #[command(flatten)]
        semco: SemCoArgs,
        #[command(flatten)]
        generation: GenArgs,
        #[command(flatten)]
        verify: VerifyArgs,
        #[command(flatten)]
        vectors: VectorArgs,
    },
    /// Append counterfactuals to their originals.
    Augment {
        corpus: PathBuf,
        #[arg(long)]
        cad: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score predictions against a gold corpus.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Defaults to the gold corpus header's negative label.
        #[arg(long)]
        negative_label: Option<String>,
        /// Count the negative label in micro and macro scores.
        #[arg(long, conflicts_with = "negative_label")]
        include_negative: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generator ablation on the synthetic shortcut benchmark.
    Robustness {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        confound_rate: f64,
        #[arg(long, default_value_t = 2000)]
        train_size: usize,
        #[arg(long, default_value_t = 500)]
        test_size: usize,
        /// Also write train.jsonl, test.jsonl and vectors.txt here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The whole pipeline: `run [CONFIG] [--KEY VALUE]... [--print-config]`.
    /// Every config key works as a flag, e.g. `--synco.tdt 0.3`;
    /// `--print-config` prints the effective configuration and exits.
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "ARGS")]
        args: Vec<String>,
    },
    /// Serve a trained model over the prediction protocol.
    ServeStub {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[command(flatten)]
        vectors: VectorArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LayerArg {
    Syn,
    Sem,
}

#[derive(Args, Debug)]
struct VectorArgs {
    /// Text embeddings file (`word v1 v2 ...` per line).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    embeddings_dim: Option<usize>,
    /// zero_vector or hashed_random.
    #[arg(long)]
    oov_policy: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    lr0: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Seeds candidate sampling, the choice among verified candidates and training.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `builtin` or `http:<url>`.
    #[arg(long)]
    classifier: Option<String>,
    /// Verify with this model instead of training one on the corpus.
    #[arg(long, conflicts_with = "classifier")]
    model: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
}

/// Knobs shared by both generators.
#[derive(Args, Debug)]
struct GenArgs {
    /// Candidates sampled per original.
    #[arg(long)]
    candidates: Option<usize>,
    /// Accept only predictions equal to the candidate's label.
    #[arg(long)]
    strict_flip: bool,
}

#[derive(Args, Debug)]
struct SynCoArgs {
    /// Entity pairs need a topological distance below this [default: 0.2].
    #[arg(long)]
    tdt: Option<f64>,
    /// Neighbors are replaced when feature similarity exceeds this [default: 0.8].
    #[arg(long)]
    fst: Option<f64>,
    /// mean or sum of the three centralities.
    #[arg(long)]
    aggregation: Option<String>,
    /// embedding or one_hot.
    #[arg(long)]
    feature_mode: Option<String>,
    /// POS and relation tag embedding size [default: 30].
    #[arg(long)]
    tags_dim: Option<usize>,
    /// Defaults to --seed.
    #[arg(long)]
    tags_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SemCoArgs {
    /// Paths are spliced when their similarity exceeds this [default: 0.6].
    #[arg(long)]
    sst: Option<f64>,
    /// Include entity tokens in the path similarity.
    #[arg(long)]
    include_entities: bool,
}

fn put<T: ToString>(cfg: &mut PipelineConfig, key: &str, value: &Option<T>) -> Result<(), ConfigError> {
    match value {
        Some(v) => cfg.set_flag(key, &v.to_string()),
        None => Ok(()),
    }
}

impl VectorArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        if let Some(path) = &self.embeddings {
            cfg.embeddings_path = Some(path.clone());
        }
        put(cfg, "embeddings.dim", &self.embeddings_dim)?;
        put(cfg, "embeddings.oov_policy", &self.oov_policy)
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        put(cfg, "seed", &self.seed)?;
        put(cfg, "train.lr0", &self.lr0)?;
        put(cfg, "train.lr_decay", &self.lr_decay)?;
        put(cfg, "train.l2", &self.l2)?;
        put(cfg, "train.epochs", &self.epochs)?;
        put(cfg, "train.batch_size", &self.batch_size)
    }
}

impl VerifyArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        put(cfg, "classifier", &self.classifier)?;
        self.train.apply(cfg)
    }
}

impl SynCoArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        put(cfg, "synco.tdt", &self.tdt)?;
        put(cfg, "synco.fst", &self.fst)?;
        put(cfg, "synco.aggregation", &self.aggregation)?;
        put(cfg, "synco.feature_mode", &self.feature_mode)?;
        put(cfg, "tags.dim", &self.tags_dim)?;
        put(cfg, "tags.seed", &self.tags_seed)
    }
}

impl GenArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        for method in ["synco", "semco"] {
            put(cfg, &format!("{method}.candidates"), &self.candidates)?;
            if self.strict_flip {
                cfg.set_flag(&format!("{method}.strict_flip"), "true")?;
            }
        }
        Ok(())
    }
}

impl SemCoArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), ConfigError> {
        put(cfg, "semco.sst", &self.sst)?;
        if self.include_entities {
            cfg.set_flag("semco.include_entities", "true")?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .parse_default_env()
        .init();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coco: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
