//! Sentence vectors.
//!
//! Models never compute embeddings from an encoder directly; they ask an
//! [`EmbeddingProvider`] for the vector of a given sentence. Two providers
//! ship with the crate: [`EmbeddingStore`], which serves vectors precomputed
//! by an external multilingual encoder, and [`HashingEmbedder`], a
//! deterministic bag-of-words stand-in used for self-contained runs.

mod hashing;
mod store;

pub use hashing::{hashing_embed, stable_hash, tokenize, HashingEmbedder};
pub use store::{read_raw_rows, read_text_rows, EmbeddingStore, STORE_MAGIC};

use crate::corpus::LabeledDocument;
use crate::error::{Error, Result};

/// Default sentence vector width.
pub const DEFAULT_DIM: usize = 1024;

pub trait EmbeddingProvider: Sync {
    fn dim(&self) -> usize;

    /// Vector for sentence `position` of `doc`.
    fn sentence_vector(&self, doc: &LabeledDocument, position: usize) -> Result<Vec<f64>>;

    /// All sentence vectors of a document, row-major `len × dim`.
    fn document_matrix(&self, doc: &LabeledDocument) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(doc.len() * self.dim());
        for position in 0..doc.len() {
            let v = self.sentence_vector(doc, position)?;
            if v.len() != self.dim() {
                return Err(Error::Shape(format!(
                    "sentence {} has {} values, expected {}",
                    doc.sentence_key(position),
                    v.len(),
                    self.dim()
                )));
            }
            out.extend(v);
        }
        Ok(out)
    }
}

/// Mean of a document's sentence vectors.
pub fn document_average(doc: &LabeledDocument, provider: &dyn EmbeddingProvider) -> Result<Vec<f64>> {
    if doc.is_empty() {
        return Err(Error::Invalid(format!("document {} is empty", doc.id)));
    }
    let mut mean = vec![0.0; provider.dim()];
    for position in 0..doc.len() {
        let v = provider.sentence_vector(doc, position)?;
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let n = doc.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}
