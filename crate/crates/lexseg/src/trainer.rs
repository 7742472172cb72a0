//! Mini-batch training with plateau learning-rate reduction and early
//! stopping on validation accuracy.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledDocument};
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::neural::{adam_step, backward, forward, init_params, AdamState, Batch, ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSchedule {
    pub max_epochs: usize,
    pub initial_lr: f64,
    pub reduced_lr: f64,
    /// Epochs without a strictly lower validation loss before the single
    /// learning-rate reduction.
    pub lr_patience: usize,
    /// Epochs without a strictly higher validation accuracy before stopping.
    pub stop_patience: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            max_epochs: 1000,
            initial_lr: 4e-3,
            reduced_lr: 4e-4,
            lr_patience: 50,
            stop_patience: 80,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.lr_patience == 0 || self.stop_patience == 0 {
            return Err(Error::Invalid("patience must be at least one epoch".into()));
        }
        let ordered = self.reduced_lr >= 0.0 && self.reduced_lr < self.initial_lr;
        if !ordered {
            return Err(Error::Invalid(format!(
                "reduced learning rate {} must be below initial {}",
                self.reduced_lr, self.initial_lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Rate used for the updates of this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: ModelParams,
    /// 1-based; zero when no epoch ran.
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl TrainResult {
    pub fn best_val_acc(&self) -> Option<f64> {
        self.history.get(self.best_epoch.checked_sub(1)?).map(|r| r.val_acc)
    }

    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_loss", "val_loss", "val_acc", "lr"])?;
        for r in &self.history {
            w.write_record([
                r.epoch.to_string(),
                format!("{:.10}", r.train_loss),
                format!("{:.10}", r.val_loss),
                format!("{:.10}", r.val_acc),
                format!("{}", r.lr),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A document turned into model inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDoc {
    pub id: String,
    /// Row-major `len × input_dim`.
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
}

impl EncodedDoc {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn encode_document(
    doc: &LabeledDocument,
    provider: &dyn EmbeddingProvider,
    config: &ModelConfig,
) -> Result<EncodedDoc> {
    if provider.dim() != config.input_dim {
        return Err(Error::Shape(format!(
            "embedding dimension {} does not match model input {}",
            provider.dim(),
            config.input_dim
        )));
    }
    if doc.len() > config.max_len {
        return Err(Error::DocumentTooLong {
            doc: doc.id.clone(),
            len: doc.len(),
            max: config.max_len,
        });
    }
    Ok(EncodedDoc {
        id: doc.id.clone(),
        inputs: provider.document_matrix(doc)?,
        labels: doc.sentences.iter().map(|s| s.label.index()).collect(),
    })
}

pub fn encode_documents(
    docs: &[LabeledDocument],
    provider: &dyn EmbeddingProvider,
    config: &ModelConfig,
) -> Result<Vec<EncodedDoc>> {
    docs.iter().map(|d| encode_document(d, provider, config)).collect()
}

fn make_batch(docs: &[&EncodedDoc], config: &ModelConfig) -> Result<Batch> {
    let seqs: Vec<(&[f64], &[usize])> = docs
        .iter()
        .map(|d| (d.inputs.as_slice(), d.labels.as_slice()))
        .collect();
    let pad_to = config.pad_to_max_len.then_some(config.max_len);
    Batch::from_sequences(&seqs, config.input_dim, pad_to)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    best
}

/// Class probabilities per document, `len × classes`, dropout off.
fn probabilities(params: &ModelParams, docs: &[&EncodedDoc], config: &ModelConfig) -> Result<Vec<Vec<f64>>> {
    let classes = config.num_classes;
    let mut out = Vec::with_capacity(docs.len());
    for chunk in docs.chunks(config.batch_size) {
        let batch = make_batch(chunk, config)?;
        let (probs, _) = forward(params, &batch, config, None)?;
        for (b, doc) in chunk.iter().enumerate() {
            let start = b * batch.steps * classes;
            out.push(probs[start..start + doc.len() * classes].to_vec());
        }
    }
    Ok(out)
}

/// Masked mean loss and accuracy over every sentence of `docs`.
pub fn evaluate_encoded(params: &ModelParams, docs: &[EncodedDoc], config: &ModelConfig) -> Result<(f64, f64)> {
    evaluate_refs(params, &docs.iter().collect::<Vec<_>>(), config)
}

pub fn evaluate_refs(params: &ModelParams, docs: &[&EncodedDoc], config: &ModelConfig) -> Result<(f64, f64)> {
    let probs = probabilities(params, docs, config)?;
    let classes = config.num_classes;
    let (mut nll, mut correct, mut count) = (0.0, 0usize, 0usize);
    for (doc, p) in docs.iter().zip(&probs) {
        for (t, &label) in doc.labels.iter().enumerate() {
            let row = &p[t * classes..(t + 1) * classes];
            nll -= row[label].max(f64::MIN_POSITIVE).ln();
            correct += usize::from(argmax(row) == label);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Invalid("nothing to evaluate".into()));
    }
    Ok((nll / count as f64, correct as f64 / count as f64))
}

pub fn evaluate(
    params: &ModelParams,
    docs: &[LabeledDocument],
    provider: &dyn EmbeddingProvider,
    config: &ModelConfig,
) -> Result<(f64, f64)> {
    evaluate_encoded(params, &encode_documents(docs, provider, config)?, config)
}

/// Argmax label per sentence; ties go to the lowest class index.
pub fn predict_encoded(params: &ModelParams, docs: &[EncodedDoc], config: &ModelConfig) -> Result<Vec<Vec<Label>>> {
    predict_refs(params, &docs.iter().collect::<Vec<_>>(), config)
}

pub fn predict_refs(params: &ModelParams, docs: &[&EncodedDoc], config: &ModelConfig) -> Result<Vec<Vec<Label>>> {
    let probs = probabilities(params, docs, config)?;
    probs
        .iter()
        .map(|p| {
            p.chunks(config.num_classes)
                .map(|row| {
                    Label::from_index(argmax(row))
                        .ok_or_else(|| Error::Invalid("model has more than three classes".into()))
                })
                .collect()
        })
        .collect()
}

pub fn predict(
    params: &ModelParams,
    doc: &LabeledDocument,
    provider: &dyn EmbeddingProvider,
    config: &ModelConfig,
) -> Result<Vec<Label>> {
    let encoded = encode_document(doc, provider, config)?;
    Ok(predict_encoded(params, std::slice::from_ref(&encoded), config)?.remove(0))
}

pub fn train(
    train_docs: &[LabeledDocument],
    val_docs: &[LabeledDocument],
    provider: &dyn EmbeddingProvider,
    config: &ModelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<TrainResult> {
    let train_set = encode_documents(train_docs, provider, config)?;
    let val_set = encode_documents(val_docs, provider, config)?;
    train_encoded(&train_set, &val_set, config, schedule, seed)
}

/// Trains from `seed`-derived initial weights; returns the weights of the
/// epoch with the highest validation accuracy (earliest on ties).
pub fn train_encoded(
    train_set: &[EncodedDoc],
    val_set: &[EncodedDoc],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<TrainResult> {
    let train_refs: Vec<&EncodedDoc> = train_set.iter().collect();
    let val_refs: Vec<&EncodedDoc> = val_set.iter().collect();
    train_refs_with(&train_refs, &val_refs, config, schedule, seed)
}

/// [`train_encoded`] over borrowed documents.
pub fn train_refs_with(
    train_set: &[&EncodedDoc],
    val_set: &[&EncodedDoc],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<TrainResult> {
    config.validate()?;
    schedule.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Invalid("training and validation sets must be non-empty".into()));
    }
    let mut params = init_params(config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0fb_a7c4);
    let mut adam = AdamState::new(&params, schedule.initial_lr);
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let (mut acc_wait, mut loss_wait, mut reduced) = (0, 0, false);
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=schedule.max_epochs {
        order.shuffle(&mut rng);
        let lr = adam.lr;
        let (mut loss_sum, mut seen) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let docs: Vec<&EncodedDoc> = chunk.iter().map(|&i| train_set[i]).collect();
            let batch = make_batch(&docs, config)?;
            let dropout_seed = rng.next_u64();
            let dropout = (config.input_dropout_rate > 0.0).then_some(dropout_seed);
            let (probs, cache) = forward(&params, &batch, config, dropout)?;
            let loss = crate::neural::masked_loss(&probs, &batch.labels, &batch.mask)?;
            let grads = backward(&params, &batch, &cache, config)?;
            adam_step(&mut params, &grads, &mut adam)?;
            let n = batch.unmasked();
            loss_sum += loss * n as f64;
            seen += n;
        }
        let (val_loss, val_acc) = evaluate_refs(&params, val_set, config)?;
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / seen as f64,
            val_loss,
            val_acc,
            lr,
        });

        if val_acc > best_acc {
            best_acc = val_acc;
            best = params.clone();
            best_epoch = epoch;
            acc_wait = 0;
        } else {
            acc_wait += 1;
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            loss_wait = 0;
        } else {
            loss_wait += 1;
            if !reduced && loss_wait >= schedule.lr_patience {
                adam.lr = schedule.reduced_lr;
                reduced = true;
            }
        }
        if acc_wait >= schedule.stop_patience {
            break;
        }
    }
    Ok(TrainResult {
        params: best,
        best_epoch,
        history,
    })
}
