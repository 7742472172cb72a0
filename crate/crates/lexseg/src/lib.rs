//! Sentence-level functional segmentation of court decisions across legal
//! contexts.
//!
//! Each sentence of a decision is labeled Background, Analysis or Outcome by
//! a bidirectional GRU that reads one sentence vector per step. The crate
//! covers the whole pipeline: span-annotated corpus ingestion
//! ([`corpus`]), inter-annotator agreement ([`agreement`]), sentence
//! vectors ([`embed`]), the network and its gradients ([`neural`]),
//! training ([`trainer`]), the ten-fold cross-context protocol
//! ([`experiments`]), scoring and significance tests ([`metrics`]) and the
//! document-level analyses ([`analysis`]). The `lexseg` binary exposes all
//! of it through [`cli::dispatch`].

pub mod agreement;
pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod neural;
pub mod svg;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
