//! Ten-fold cross-context protocol.
//!
//! For fold `i`, the training pool contributes its folds other than `i` and
//! `(i+1) mod 10` as training data and fold `(i+1) mod 10` as validation
//! data; the target context contributes fold `i` as test data. Which
//! contexts make up the pool depends on the [`PoolMode`].

mod report;
mod run;

pub use report::{
    read_fold_csv, write_fold_csv, CellSummary, Comparison, FoldRow, ModelKind, RowSummary, RunReport,
};
pub use run::{derive_seed, run_experiment, ExperimentMode, RunOptions};

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledDocument};
use crate::error::{Error, Result};

pub const NUM_FOLDS: usize = 10;

/// Stable document → fold assignment per context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: BTreeMap<String, BTreeMap<String, usize>>,
}

impl FoldPlan {
    pub fn contexts(&self) -> impl Iterator<Item = &str> {
        self.folds.keys().map(String::as_str)
    }

    pub fn fold_of(&self, context: &str, id: &str) -> Option<usize> {
        self.folds.get(context)?.get(id).copied()
    }

    fn context(&self, name: &str) -> Result<&BTreeMap<String, usize>> {
        self.folds.get(name).ok_or_else(|| Error::UnknownContext(name.to_string()))
    }
}

/// Shuffles each context's documents with a seeded generator and deals them
/// round-robin into ten folds.
pub fn assign_folds(docs: &[LabeledDocument], seed: u64) -> Result<FoldPlan> {
    let mut by_context: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for doc in docs {
        by_context.entry(&doc.context).or_default().push(&doc.id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    for (context, mut ids) in by_context {
        if ids.len() < NUM_FOLDS {
            return Err(Error::TooFewDocuments {
                context: context.to_string(),
                count: ids.len(),
                needed: NUM_FOLDS,
            });
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let assignment = ids
            .into_iter()
            .enumerate()
            .map(|(k, id)| (id.to_string(), k % NUM_FOLDS))
            .collect();
        folds.insert(context.to_string(), assignment);
    }
    Ok(FoldPlan { folds })
}

/// Which contexts feed the training pool.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PoolMode {
    /// A single named context. With the target itself this is the in-context
    /// setting.
    OutContext(String),
    /// Every context except the target.
    PooledOutContext,
    /// Every context including the target.
    PooledWithInContext,
    InContext,
    /// No model; labels sampled from the target's train+val distribution.
    RandomBaseline,
}

impl PoolMode {
    /// Training pool contexts for `target`.
    pub fn pool(&self, plan: &FoldPlan, target: &str) -> Result<Vec<String>> {
        plan.context(target)?;
        let pool: Vec<String> = match self {
            PoolMode::OutContext(c) => {
                plan.context(c)?;
                vec![c.clone()]
            }
            PoolMode::InContext | PoolMode::RandomBaseline => vec![target.to_string()],
            PoolMode::PooledOutContext => plan.contexts().filter(|c| *c != target).map(str::to_string).collect(),
            PoolMode::PooledWithInContext => plan.contexts().map(str::to_string).collect(),
        };
        if pool.is_empty() {
            return Err(Error::Invalid(format!(
                "pooled out-context training for {target} needs at least one other context"
            )));
        }
        Ok(pool)
    }
}

/// Document ids of one fold's train, validation and test sets, each sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

pub fn validation_fold(fold: usize) -> usize {
    (fold + 1) % NUM_FOLDS
}

pub fn build_split(plan: &FoldPlan, mode: &PoolMode, target: &str, fold: usize) -> Result<Split> {
    if fold >= NUM_FOLDS {
        return Err(Error::Invalid(format!("fold {fold} outside 0..{NUM_FOLDS}")));
    }
    let val_fold = validation_fold(fold);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for context in mode.pool(plan, target)? {
        for (id, &f) in plan.context(&context)? {
            if f == val_fold {
                val.push(id.clone());
            } else if f != fold {
                train.push(id.clone());
            }
        }
    }
    let mut test: Vec<String> = plan
        .context(target)?
        .iter()
        .filter(|(_, &f)| f == fold)
        .map(|(id, _)| id.clone())
        .collect();
    train.sort();
    val.sort();
    test.sort();
    Ok(Split { train, val, test })
}

/// Empirical label distribution of `reference`, sampled i.i.d. for every
/// sentence of `test`.
pub fn random_baseline(reference: &[&LabeledDocument], test: &[&LabeledDocument], seed: u64) -> Result<Vec<Vec<Label>>> {
    let mut counts = [0usize; 3];
    for doc in reference {
        for s in &doc.sentences {
            counts[s.label.index()] += 1;
        }
    }
    if counts.iter().sum::<usize>() == 0 {
        return Err(Error::Invalid("random baseline needs labeled reference sentences".into()));
    }
    let dist = WeightedIndex::new(counts).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(test
        .iter()
        .map(|doc| (0..doc.len()).map(|_| Label::ALL[dist.sample(&mut rng)]).collect())
        .collect())
}

/// Contexts present in a corpus, sorted.
pub fn corpus_contexts(docs: &[LabeledDocument]) -> Vec<String> {
    docs.iter()
        .map(|d| d.context.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
