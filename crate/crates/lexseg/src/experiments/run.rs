use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{FoldRow, ModelKind, RunReport};
use super::{build_split, random_baseline, FoldPlan, PoolMode, NUM_FOLDS};
use crate::corpus::{Label, LabeledDocument};
use crate::embed::{stable_hash, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::metrics::{micro_f1, prf_per_class};
use crate::neural::ModelConfig;
use crate::trainer::{encode_document, predict_refs, train_refs_with, EncodedDoc, TrainSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    /// One model per training context, scored on every target.
    H1,
    /// One model per target trained on every other context.
    H2,
    /// One model trained on every context, scored on every target.
    H3,
    InContext,
    Random,
}

impl FromStr for ExperimentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h1" => Ok(ExperimentMode::H1),
            "h2" => Ok(ExperimentMode::H2),
            "h3" => Ok(ExperimentMode::H3),
            "in_context" => Ok(ExperimentMode::InContext),
            "random" => Ok(ExperimentMode::Random),
            other => Err(Error::Invalid(format!(
                "unknown experiment mode {other:?} (expected h1, h2, h3, in_context or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub run_seed: u64,
    /// Worker threads; zero uses every available core.
    pub workers: usize,
    /// Log one line per finished job to stderr.
    pub verbose: bool,
}

/// Seed for one job, a pure function of the run seed and the job key.
pub fn derive_seed(run_seed: u64, key: &str) -> u64 {
    stable_hash(key.as_bytes(), run_seed)
}

/// One trained model (or one baseline draw) and the targets it is scored on.
struct Job {
    kind: ModelKind,
    model: String,
    pool: PoolMode,
    fold: usize,
    targets: Vec<String>,
}

impl Job {
    fn key(&self) -> String {
        let scope = match self.kind {
            ModelKind::PooledOut | ModelKind::InContext | ModelKind::Random => self.targets.join("+"),
            _ => String::new(),
        };
        format!("{}/{}/{}/{}", self.kind, self.model, scope, self.fold)
    }
}

fn plan_jobs(plan: &FoldPlan, mode: ExperimentMode, targets: &[String]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for fold in 0..NUM_FOLDS {
        match mode {
            ExperimentMode::H1 => {
                for context in plan.contexts() {
                    jobs.push(Job {
                        kind: ModelKind::OutContext,
                        model: context.to_string(),
                        pool: PoolMode::OutContext(context.to_string()),
                        fold,
                        targets: targets.to_vec(),
                    });
                }
            }
            ExperimentMode::H3 => jobs.push(Job {
                kind: ModelKind::PooledIn,
                model: ModelKind::PooledIn.name().to_string(),
                pool: PoolMode::PooledWithInContext,
                fold,
                targets: targets.to_vec(),
            }),
            ExperimentMode::H2 | ExperimentMode::InContext | ExperimentMode::Random => {
                let (kind, pool) = match mode {
                    ExperimentMode::H2 => (ModelKind::PooledOut, PoolMode::PooledOutContext),
                    ExperimentMode::InContext => (ModelKind::InContext, PoolMode::InContext),
                    _ => (ModelKind::Random, PoolMode::RandomBaseline),
                };
                for target in targets {
                    jobs.push(Job {
                        kind,
                        model: kind.name().to_string(),
                        pool: pool.clone(),
                        fold,
                        targets: vec![target.clone()],
                    });
                }
            }
        }
    }
    jobs
}

fn score(job: &Job, target: &str, gold: &[Label], predicted: &[Label]) -> Result<FoldRow> {
    let classes = prf_per_class(gold, predicted)?;
    let [b, a, o] = classes.f1s();
    Ok(FoldRow {
        kind: job.kind,
        model: job.model.clone(),
        target: target.to_string(),
        fold: job.fold,
        micro_f1: micro_f1(gold, predicted)?,
        f1_background: b,
        f1_analysis: a,
        f1_outcome: o,
        sentences: gold.len(),
    })
}

/// Runs every job of `mode` over ten folds and aggregates the fold scores.
///
/// An empty `targets` list means every context of the plan. Results do not
/// depend on the number of workers.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    corpus: &[LabeledDocument],
    provider: &dyn EmbeddingProvider,
    plan: &FoldPlan,
    mode: ExperimentMode,
    targets: &[String],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    options: &RunOptions,
) -> Result<RunReport> {
    let targets: Vec<String> = if targets.is_empty() {
        plan.contexts().map(str::to_string).collect()
    } else {
        targets.to_vec()
    };
    for t in &targets {
        if !plan.folds.contains_key(t) {
            return Err(Error::UnknownContext(t.clone()));
        }
    }
    let docs: BTreeMap<&str, &LabeledDocument> = corpus.iter().map(|d| (d.id.as_str(), d)).collect();
    let lookup = |id: &str| docs.get(id).copied().ok_or_else(|| Error::Invalid(format!("fold plan names unknown document {id}")));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;

    let encoded: BTreeMap<&str, EncodedDoc> = if mode == ExperimentMode::Random {
        BTreeMap::new()
    } else {
        config.validate()?;
        schedule.validate()?;
        pool.install(|| {
            corpus
                .par_iter()
                .map(|d| Ok((d.id.as_str(), encode_document(d, provider, config)?)))
                .collect::<Result<_>>()
        })?
    };
    let encoded_of = |id: &String| encoded.get(id.as_str()).ok_or_else(|| Error::Invalid(format!("document {id} was not encoded")));

    let jobs = plan_jobs(plan, mode, &targets);
    let run_job = |job: &Job| -> Result<Vec<FoldRow>> {
        let seed = derive_seed(options.run_seed, &job.key());
        let mut rows = Vec::new();
        if job.kind == ModelKind::Random {
            let target = &job.targets[0];
            let split = build_split(plan, &PoolMode::InContext, target, job.fold)?;
            let reference = split.train.iter().chain(&split.val).map(|id| lookup(id)).collect::<Result<Vec<_>>>()?;
            let test = split.test.iter().map(|id| lookup(id)).collect::<Result<Vec<_>>>()?;
            let predicted = random_baseline(&reference, &test, seed)?;
            let gold: Vec<Label> = test.iter().flat_map(|d| d.labels()).collect();
            rows.push(score(job, target, &gold, &predicted.concat())?);
            return Ok(rows);
        }
        let split = build_split(plan, &job.pool, &job.targets[0], job.fold)?;
        let train_set = split.train.iter().map(encoded_of).collect::<Result<Vec<_>>>()?;
        let val_set = split.val.iter().map(encoded_of).collect::<Result<Vec<_>>>()?;
        let result = train_refs_with(&train_set, &val_set, config, schedule, seed)?;
        if options.verbose {
            eprintln!(
                "{}: best epoch {} of {}, val acc {:.4}",
                job.key(),
                result.best_epoch,
                result.history.len(),
                result.best_val_acc().unwrap_or(f64::NAN)
            );
        }
        for target in &job.targets {
            let test_ids = build_split(plan, &job.pool, target, job.fold)?.test;
            let test_set = test_ids.iter().map(encoded_of).collect::<Result<Vec<_>>>()?;
            let predicted = predict_refs(&result.params, &test_set, config)?.concat();
            let gold: Vec<Label> = test_set
                .iter()
                .flat_map(|d| d.labels.iter().map(|&l| Label::ALL[l]))
                .collect();
            rows.push(score(job, target, &gold, &predicted)?);
        }
        Ok(rows)
    };
    let per_job: Vec<Vec<FoldRow>> = pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?;
    RunReport::from_folds(per_job.into_iter().flatten().collect())
}
