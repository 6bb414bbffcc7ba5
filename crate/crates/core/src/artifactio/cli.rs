//! `gauss-embed` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::artifactio::{load_model, save_model, Model, ModelFormat, PcaFit, VizSpec};
use crate::corpus::{build_vocabulary, SamplingTables, Vocabulary};
use crate::evalsuite::{
    eval_entailment, eval_similarity, nearest, EntailmentDataset, EvalReport, Metric,
    SimilarityDataset,
};
use crate::relations::{load_relations, RelationTag, TargetMode};
use crate::trainer::{train, BiasMode, Corpus, Supervision, TrainConfig};

/// Environment variable that overrides `--seed` when set.
pub const SEED_ENV: &str = "GAUSS_EMBED_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "gauss-embed",
    version,
    about = "Gaussian word embeddings with a Wasserstein-2 energy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count a corpus and write the vocabulary file.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on the corpus alone.
    Train(TrainArgs),
    /// Train with relation triples as a second context.
    TrainEi {
        #[command(flatten)]
        train: TrainArgs,
        /// TSV of `relation<TAB>word1<TAB>word2`.
        #[arg(long)]
        relations: PathBuf,
        #[arg(long, default_value = "all")]
        ei_mode: TargetMode,
        /// Comma-separated relation names to keep.
        #[arg(long, value_delimiter = ',')]
        whitelist: Option<Vec<String>>,
    },
    /// Spearman correlation on word-similarity datasets.
    EvalSim {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "dataset", required = true)]
        datasets: Vec<PathBuf>,
    },
    /// Best F1 and average precision on entailment datasets.
    EvalEntail {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "dataset", required = true)]
        datasets: Vec<PathBuf>,
    },
    /// Nearest neighbours of a word.
    Nearest {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value = "cosine")]
        metric: Metric,
    },
    /// Draw words as circles in the PCA plane of their means.
    Viz {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated words.
        #[arg(long, value_delimiter = ',', required = true)]
        words: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Fit PCA on every word of the model instead of the selection.
        #[arg(long)]
        pca_global: bool,
        #[arg(long, default_value_t = 800.0)]
        extent: f64,
    },
    /// Rewrite a model in another format.
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "text")]
        format: ModelFormat,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Vocabulary file from `build-vocab`; built from the corpus if omitted.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "text")]
    format: ModelFormat,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lr_min: Option<f64>,
    /// Sub-sampling threshold; 0 disables sub-sampling.
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    sigma_init: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    max_norm: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bias_mode: Option<BiasMode>,
    #[arg(long)]
    fixed_bias_value: Option<f64>,
    #[arg(long)]
    squared_w2_energy: bool,
    #[arg(long)]
    dynamic_window: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    shuffle_buffer: Option<usize>,
    #[arg(long)]
    table_size: Option<usize>,
}

impl TrainArgs {
    fn config(&self, seed_override: Option<&str>) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let seed = match seed_override {
            Some(s) => s
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={s:?} is not an unsigned integer"))?,
            None => self.seed.unwrap_or(d.seed),
        };
        let subsample = match self.subsample {
            Some(0.0) => None,
            Some(t) => Some(t),
            None => d.subsample,
        };
        Ok(TrainConfig {
            dim: self.dim.unwrap_or(d.dim),
            epochs: self.epochs.unwrap_or(d.epochs),
            window: self.window.unwrap_or(d.window),
            negatives: self.negatives.unwrap_or(d.negatives),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            lr_min: self.lr_min.unwrap_or(d.lr_min),
            subsample,
            alpha: self.alpha.unwrap_or(d.alpha),
            min_count: self.min_count.unwrap_or(d.min_count),
            sigma_init: self.sigma_init.unwrap_or(d.sigma_init),
            sigma_min: self.sigma_min.unwrap_or(d.sigma_min),
            sigma_max: self.sigma_max.unwrap_or(d.sigma_max),
            max_norm: self.max_norm.or(d.max_norm),
            seed,
            bias_mode: self.bias_mode.unwrap_or(d.bias_mode),
            fixed_bias_value: self.fixed_bias_value.unwrap_or(d.fixed_bias_value),
            squared_w2_energy: self.squared_w2_energy,
            dynamic_window: self.dynamic_window,
            threads: self.threads.unwrap_or(d.threads),
            shuffle_buffer: self.shuffle_buffer.unwrap_or(d.shuffle_buffer),
            table_size: self.table_size.unwrap_or(d.table_size),
        })
    }

    fn vocabulary(&self, config: &TrainConfig) -> Result<Vocabulary> {
        Ok(match &self.vocab {
            Some(p) => Vocabulary::load(p)?,
            None => build_vocabulary(&self.corpus, config.min_count)?,
        })
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let seed = std::env::var(SEED_ENV).ok();
    run_with_seed(argv, seed.as_deref(), out, err)
}

/// [`run`] with the seed override passed explicitly instead of read from
/// the environment.
pub fn run_with_seed<I, T>(
    argv: I,
    seed_override: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli.command, seed_override, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn write_model(model: &Model<f64>, path: &Path, format: ModelFormat) -> Result<()> {
    save_model(model, path, format)?;
    Ok(())
}

fn execute(
    command: Command,
    seed_override: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    match command {
        Command::BuildVocab {
            corpus,
            min_count,
            out: path,
        } => {
            let vocab = build_vocabulary(&corpus, min_count)?;
            vocab.save(&path)?;
            writeln!(
                err,
                "vocab words={} total_tokens={}",
                vocab.len(),
                vocab.total_tokens()
            )?;
        }
        Command::Train(args) => {
            let config = args.config(seed_override)?;
            let vocab = args.vocabulary(&config)?;
            let tables = SamplingTables::build(&vocab, config.subsample, config.table_size)?;
            let corpus = Corpus {
                path: &args.corpus,
                vocab: &vocab,
                tables: &tables,
            };
            let (params, report) = train::<f64>(corpus, None, &config)?;
            write!(err, "{report}")?;
            write_model(
                &Model::new(vocab.words().to_vec(), params)?,
                &args.out,
                args.format,
            )?;
        }
        Command::TrainEi {
            train: args,
            relations,
            ei_mode,
            whitelist,
        } => {
            let config = args.config(seed_override)?;
            let vocab = args.vocabulary(&config)?.with_sentinel();
            let whitelist = match whitelist {
                Some(names) => names
                    .iter()
                    .map(|n| n.parse::<RelationTag>())
                    .collect::<Result<Vec<_>, _>>()?,
                None => RelationTag::ALL.to_vec(),
            };
            let (store, ingest) = load_relations(&relations, &vocab, &whitelist)?;
            writeln!(err, "{ingest}")?;
            let tables = SamplingTables::build(&vocab, config.subsample, config.table_size)?;
            let corpus = Corpus {
                path: &args.corpus,
                vocab: &vocab,
                tables: &tables,
            };
            let supervision = Supervision {
                store: &store,
                mode: ei_mode,
            };
            let (params, report) = train::<f64>(corpus, Some(supervision), &config)?;
            write!(err, "{report}")?;
            write_model(
                &Model::new(vocab.words().to_vec(), params)?,
                &args.out,
                args.format,
            )?;
        }
        Command::EvalSim { model, datasets } => {
            let model = load_model(&model)?;
            let mut report = EvalReport::default();
            for path in &datasets {
                let data = SimilarityDataset::load(path)?;
                report.similarity.push(
                    eval_similarity(&model, &data)
                        .with_context(|| format!("{}", path.display()))?,
                );
            }
            write!(out, "{}{report}", report.table())?;
        }
        Command::EvalEntail { model, datasets } => {
            let model = load_model(&model)?;
            let mut report = EvalReport::default();
            for path in &datasets {
                let data = EntailmentDataset::load(path)?;
                report.entailment.push(
                    eval_entailment(&model, &data)
                        .with_context(|| format!("{}", path.display()))?,
                );
            }
            write!(out, "{}{report}", report.table())?;
        }
        Command::Nearest {
            model,
            word,
            n,
            metric,
        } => {
            let model = load_model(&model)?;
            for (w, s) in nearest(&model, &word, n, metric)? {
                writeln!(out, "{w}\t{s:.6}")?;
            }
        }
        Command::Viz {
            model,
            words,
            out: path,
            pca_global,
            extent,
        } => {
            let model = load_model(&model)?;
            let ids = words
                .iter()
                .map(|w| {
                    model
                        .id(w)
                        .ok_or_else(|| anyhow!("word {w:?} is not in the model"))
                })
                .collect::<Result<Vec<u32>>>()?;
            let rows: Vec<&[f64]> = ids.iter().map(|&i| model.params.mean(i)).collect();
            let fit = if pca_global {
                let all: Vec<&[f64]> = (0..model.words.len() as u32)
                    .map(|i| model.params.mean(i))
                    .collect();
                PcaFit::fit(&all)?
            } else {
                PcaFit::fit(&rows)?
            };
            let points: Vec<[f64; 2]> = rows.iter().map(|r| fit.project(r)).collect();
            let sigmas: Vec<f64> = ids
                .iter()
                .map(|&i| model.params.sigmas[i as usize])
                .collect();
            let spec = VizSpec::layout(words, &points, &sigmas, extent)?;
            crate::artifactio::emit_viz(&spec, &path)?;
        }
        Command::Export {
            model,
            out: path,
            format,
        } => {
            let m = load_model(&model)?;
            if m.words.is_empty() {
                bail!("model has no words");
            }
            write_model(&m, &path, format)?;
        }
    }
    Ok(())
}
