//! Command-line front end.
//!
//! Every subcommand computes its results in memory and writes them from the
//! calling thread once all work is done, so reruns with the same inputs and
//! seeds produce byte-identical files.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::agreement::{raw_agreement, Aggregation};
use crate::analysis::{label_position_distribution, pca_2d, write_pca_csv};
use crate::corpus::{
    corpus_statistics, label_document, load_and_validate, read_labeled, write_labeled, LabelOptions,
    LabeledDocument, Sentencizer, SplitMode, DEFAULT_MAX_SENTENCES,
};
use crate::embed::{
    document_average, read_raw_rows, read_text_rows, EmbeddingProvider, EmbeddingStore, HashingEmbedder,
};
use crate::error::{Error, Result};
use crate::experiments::{
    assign_folds, build_split, read_fold_csv, run_experiment, ExperimentMode, PoolMode, RunOptions, RunReport,
};
use crate::metrics::{micro_f1, prf_per_class};
use crate::neural::{save_checkpoint, ModelConfig};
use crate::svg;
use crate::synthetic::{generate, to_raw_document, SyntheticSpec};
use crate::trainer::{predict, train, TrainSchedule};

pub const WORKERS_ENV: &str = "LEXSEG_WORKERS";

/// Durable description of a training or experiment run. Relative paths are
/// resolved against the manifest's directory; command-line flags override
/// individual fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub corpus: Option<PathBuf>,
    /// Embedding store. Without one, sentences are embedded with the hashing
    /// embedder at the model's input width.
    pub store: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub targets: Vec<String>,
    pub fold_seed: u64,
    pub run_seed: u64,
    pub hash_seed: u64,
    /// Never written back out: results do not depend on it.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    pub model: ModelConfig,
    pub schedule: TrainSchedule,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut manifest: RunManifest = serde_json::from_reader(File::open(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut manifest.corpus, &mut manifest.store, &mut manifest.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(manifest)
    }

    fn apply(&mut self, run: &RunArgs) {
        if let Some(c) = &run.corpus {
            self.corpus = Some(c.clone());
        }
        if let Some(s) = &run.store {
            self.store = Some(s.clone());
        }
        if let Some(o) = &run.out {
            self.out = Some(o.clone());
        }
        if let Some(seed) = run.seed {
            self.fold_seed = seed;
            self.run_seed = seed;
        }
        if let Some(e) = run.max_epochs {
            self.schedule.max_epochs = e;
        }
        if !run.target.is_empty() {
            self.targets = run.target.clone();
        }
        if let Some(w) = run.workers {
            self.workers = Some(w);
        } else if let Some(w) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()) {
            self.workers = Some(w);
        }
    }

    fn corpus_path(&self) -> Result<&Path> {
        let path = self.corpus.as_deref().ok_or_else(|| Error::Invalid("no corpus given (--corpus)".into()))?;
        if !path.exists() {
            return Err(Error::Invalid(format!("corpus {} does not exist", path.display())));
        }
        Ok(path)
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::Invalid("no output directory given (--out)".into()))
    }

    fn provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match &self.store {
            Some(path) => Box::new(EmbeddingStore::read_expecting(path, self.model.input_dim)?),
            None => Box::new(HashingEmbedder::new(self.model.input_dim, self.hash_seed)),
        })
    }
}

#[derive(Parser, Debug)]
#[command(name = "lexseg", version, about = "Functional segmentation of court decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Labeled-document JSONL.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Target context; repeat for several.
    #[arg(long)]
    target: Vec<String>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn manifest(&self) -> Result<RunManifest> {
        let mut manifest = match &self.config {
            Some(path) => RunManifest::load(path)?,
            None => RunManifest::default(),
        };
        manifest.apply(self);
        Ok(manifest)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ImportFormat {
    /// Headerless little-endian f32 rows.
    Raw,
    /// One whitespace-separated row per line.
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Span-annotated corpus to labeled sentences and a statistics table.
    Preprocess {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        annotator: Option<String>,
        #[arg(long, default_value = "terminator")]
        split_mode: String,
        #[arg(long, default_value_t = DEFAULT_MAX_SENTENCES)]
        max_sentences: usize,
    },
    /// Precomputed sentence vectors, one row per sentence in corpus order, to a store.
    EmbedImport {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, value_enum, default_value = "raw")]
        format: ImportFormat,
        #[arg(long, default_value_t = crate::embed::DEFAULT_DIM)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hashing bag-of-words vectors to a store.
    EmbedHash {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = crate::embed::DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raw character agreement between two annotators.
    Agreement {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        /// Average per-document ratios instead of pooling counts.
        #[arg(long)]
        per_document: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model on one fold and score it on the target's test fold.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Training context; defaults to the target.
        #[arg(long)]
        train_context: Option<String>,
        #[arg(long, default_value_t = 0)]
        fold: usize,
    },
    /// Ten-fold cross-context experiment.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        /// h1, h2, h3, in_context or random.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Two-component PCA of document-average vectors.
    Pca {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Label distribution over relative document position.
    Labeldist {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate fold CSVs into a context table.
    Report {
        /// Fold CSV; repeat to merge several runs.
        #[arg(long = "folds", required = true)]
        folds: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic three-context corpus.
    Synth {
        #[arg(long, default_value_t = 60)]
        docs_per_context: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Emit the span-annotated form instead of labeled sentences.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lexseg: error: {e}");
            1
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Preprocess {
            corpus,
            out,
            annotator,
            split_mode,
            max_sentences,
        } => {
            let raw = load_and_validate(&corpus)?;
            let options = LabelOptions {
                annotator,
                sentencizer: Sentencizer::new(split_mode.parse::<SplitMode>()?),
                max_sentences,
            };
            let docs = raw.iter().map(|d| label_document(d, &options)).collect::<Result<Vec<_>>>()?;
            fs::create_dir_all(&out)?;
            write_labeled(&out.join("documents.jsonl"), &docs)?;
            corpus_statistics(&docs)?.write_csv(create(&out.join("stats.csv"))?)?;
            println!("{} documents → {}", docs.len(), out.display());
        }
        Command::EmbedImport {
            corpus,
            vectors,
            format,
            dim,
            out,
        } => {
            let docs = read_labeled(&corpus)?;
            let rows = match format {
                ImportFormat::Raw => read_raw_rows(&vectors, dim)?,
                ImportFormat::Text => read_text_rows(&vectors)?,
            };
            let store = EmbeddingStore::from_rows(&docs, rows)?;
            store.write(&out)?;
            println!("{} vectors of width {} → {}", store.len(), store.dim(), out.display());
        }
        Command::EmbedHash { corpus, dim, seed, out } => {
            let docs = read_labeled(&corpus)?;
            let store = EmbeddingStore::from_provider(&docs, &HashingEmbedder::new(dim, seed))?;
            store.write(&out)?;
            println!("{} vectors of width {dim} → {}", store.len(), out.display());
        }
        Command::Agreement {
            corpus,
            first,
            second,
            per_document,
            out,
        } => {
            let raw = load_and_validate(&corpus)?;
            let aggregation = if per_document {
                Aggregation::MacroDocument
            } else {
                Aggregation::Pooled
            };
            let report = raw_agreement(&raw, &first, &second, aggregation)?;
            match out {
                Some(path) => report.write_csv(create(&path)?)?,
                None => report.write_csv(std::io::stdout().lock())?,
            }
        }
        Command::Train {
            run,
            train_context,
            fold,
        } => {
            let manifest = run.manifest()?;
            let docs = read_labeled(manifest.corpus_path()?)?;
            let out = manifest.out_dir()?;
            let target = match manifest.targets.as_slice() {
                [t] => t.clone(),
                _ => return Err(Error::Invalid("train needs exactly one --target".into())),
            };
            let plan = assign_folds(&docs, manifest.fold_seed)?;
            let source = train_context.unwrap_or_else(|| target.clone());
            let split = build_split(&plan, &PoolMode::OutContext(source), &target, fold)?;
            let pick = |ids: &[String]| -> Vec<LabeledDocument> {
                docs.iter().filter(|d| ids.binary_search(&d.id).is_ok()).cloned().collect()
            };
            let provider = manifest.provider()?;
            let result = train(
                &pick(&split.train),
                &pick(&split.val),
                provider.as_ref(),
                &manifest.model,
                &manifest.schedule,
                manifest.run_seed,
            )?;
            let test = pick(&split.test);
            let mut gold = Vec::new();
            let mut predicted = Vec::new();
            for doc in &test {
                gold.extend(doc.labels());
                predicted.extend(predict(&result.params, doc, provider.as_ref(), &manifest.model)?);
            }
            let scores = serde_json::json!({
                "target": target,
                "fold": fold,
                "best_epoch": result.best_epoch,
                "epochs": result.history.len(),
                "micro_f1": micro_f1(&gold, &predicted)?,
                "class_f1": prf_per_class(&gold, &predicted)?.f1s(),
            });
            fs::create_dir_all(out)?;
            save_checkpoint(&out.join("model.ckpt"), &manifest.model, &result.params)?;
            result.write_history_csv(create(&out.join("history.csv"))?)?;
            write_string(&out.join("scores.json"), &format!("{}\n", serde_json::to_string_pretty(&scores)?))?;
            println!("{scores}");
        }
        Command::Experiment { run, mode } => {
            let mut manifest = run.manifest()?;
            if mode.is_some() {
                manifest.mode = mode;
            }
            let mode: ExperimentMode = manifest
                .mode
                .as_deref()
                .ok_or_else(|| Error::Invalid("no experiment mode given (--mode)".into()))?
                .parse()?;
            let docs = read_labeled(manifest.corpus_path()?)?;
            let out = manifest.out_dir()?.to_path_buf();
            let provider = manifest.provider()?;
            let plan = assign_folds(&docs, manifest.fold_seed)?;
            let options = RunOptions {
                run_seed: manifest.run_seed,
                workers: manifest.workers.unwrap_or(0),
                verbose: true,
            };
            let report = run_experiment(
                &docs,
                provider.as_ref(),
                &plan,
                mode,
                &manifest.targets,
                &manifest.model,
                &manifest.schedule,
                &options,
            )?;
            report.write_all(&out)?;
            write_string(&out.join("folds.json"), &format!("{}\n", serde_json::to_string_pretty(&plan)?))?;
            // The copy lives in the output directory, so it omits that path.
            let recorded = RunManifest { out: None, ..manifest.clone() };
            write_string(&out.join("manifest.json"), &format!("{}\n", serde_json::to_string_pretty(&recorded)?))?;
            print!("{}", report.to_text_table());
        }
        Command::Pca { run } => {
            let manifest = run.manifest()?;
            let docs = read_labeled(manifest.corpus_path()?)?;
            let out = manifest.out_dir()?;
            let provider = manifest.provider()?;
            let vectors = docs
                .iter()
                .map(|d| document_average(d, provider.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            let (model, points) = pca_2d(&vectors)?;
            fs::create_dir_all(out)?;
            write_pca_csv(create(&out.join("pca.csv"))?, &docs, &points)?;
            write_string(&out.join("pca.svg"), &svg::pca_scatter(&docs, &points))?;
            let [r1, r2] = model.explained_ratio();
            println!("explained variance ratio: {r1:.4} {r2:.4}");
        }
        Command::Labeldist {
            corpus,
            resolution,
            out,
        } => {
            let docs = read_labeled(&corpus)?;
            let grid = label_position_distribution(&docs, resolution)?;
            fs::create_dir_all(&out)?;
            for context in grid.contexts.keys() {
                grid.write_context_csv(context, create(&out.join(format!("{context}.csv")))?)?;
                if let Some(image) = svg::label_heatmap(&grid, context) {
                    write_string(&out.join(format!("{context}.svg")), &image)?;
                }
            }
        }
        Command::Report { folds, out } => {
            let mut rows = Vec::new();
            for path in &folds {
                rows.extend(read_fold_csv(path)?);
            }
            let report = RunReport::from_folds(rows)?;
            report.write_all(&out)?;
            print!("{}", report.to_text_table());
        }
        Command::Synth {
            docs_per_context,
            seed,
            raw,
            out,
        } => {
            let docs = generate(&SyntheticSpec {
                docs_per_context,
                seed,
                ..SyntheticSpec::default()
            });
            if raw {
                let mut w = create(&out)?;
                for doc in &docs {
                    serde_json::to_writer(&mut w, &to_raw_document(doc, "synth"))?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            } else {
                write_labeled(&out, &docs)?;
            }
        }
    }
    Ok(())
}
