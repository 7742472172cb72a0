//! Character-level raw agreement between two annotation layers.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::{RawDocument, SpanType};
use crate::error::{Error, Result};

/// Columns of the agreement table: the six span types followed by the
/// implicit "not marked" category.
pub const CATEGORY_COUNT: usize = 7;
pub const NOT_MARKED: usize = 6;
pub const COLUMN_NAMES: [&str; CATEGORY_COUNT] = ["OoS", "Head", "Int.S.", "Back", "Anl", "Out", "NM"];

fn category(kind: SpanType) -> usize {
    SpanType::ALL.iter().position(|&k| k == kind).unwrap()
}

/// Intersection and union character counts per category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AgreementCounts {
    pub both: [u64; CATEGORY_COUNT],
    pub either: [u64; CATEGORY_COUNT],
}

impl AgreementCounts {
    pub fn merge(&mut self, other: &AgreementCounts) {
        for i in 0..CATEGORY_COUNT {
            self.both[i] += other.both[i];
            self.either[i] += other.either[i];
        }
    }

    /// `None` where no character carries the category in either layer.
    pub fn ratios(&self) -> [Option<f64>; CATEGORY_COUNT] {
        std::array::from_fn(|i| {
            (self.either[i] > 0).then(|| self.both[i] as f64 / self.either[i] as f64)
        })
    }
}

fn char_labels(doc: &RawDocument, annotator: &str) -> Result<Vec<usize>> {
    let layer = doc.layer(annotator);
    if layer.is_empty() {
        return Err(Error::MissingAnnotator {
            doc: doc.id.clone(),
            annotator: annotator.to_string(),
        });
    }
    let mut labels = vec![NOT_MARKED; doc.char_len()];
    for span in layer {
        labels[span.start..span.end].fill(category(span.kind));
    }
    Ok(labels)
}

/// Counts for a single document.
pub fn document_counts(doc: &RawDocument, a: &str, b: &str) -> Result<AgreementCounts> {
    let la = char_labels(doc, a)?;
    let lb = char_labels(doc, b)?;
    let mut counts = AgreementCounts::default();
    for (&x, &y) in la.iter().zip(&lb) {
        counts.either[x] += 1;
        if x == y {
            counts.both[x] += 1;
        } else {
            counts.either[y] += 1;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Sum character counts across documents, then divide.
    #[default]
    Pooled,
    /// Average per-document ratios, skipping documents where a ratio is
    /// undefined.
    MacroDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub contexts: BTreeMap<String, [Option<f64>; CATEGORY_COUNT]>,
    pub overall: [Option<f64>; CATEGORY_COUNT],
}

impl AgreementReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["context"];
        header.extend(COLUMN_NAMES);
        w.write_record(&header)?;
        let rows = self
            .contexts
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once(("overall", &self.overall)));
        for (name, ratios) in rows {
            let mut record = vec![name.to_string()];
            record.extend(ratios.iter().map(|r| match r {
                Some(v) => format!("{v:.4}"),
                None => "N/A".to_string(),
            }));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn macro_average(per_doc: &[[Option<f64>; CATEGORY_COUNT]]) -> [Option<f64>; CATEGORY_COUNT] {
    std::array::from_fn(|i| {
        let defined: Vec<f64> = per_doc.iter().filter_map(|r| r[i]).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    })
}

/// Per-type ratio of characters both annotators gave that type over
/// characters at least one of them did.
pub fn raw_agreement(
    docs: &[RawDocument],
    annotator_a: &str,
    annotator_b: &str,
    aggregation: Aggregation,
) -> Result<AgreementReport> {
    let mut per_context: BTreeMap<String, Vec<AgreementCounts>> = BTreeMap::new();
    for doc in docs {
        let counts = document_counts(doc, annotator_a, annotator_b)?;
        per_context.entry(doc.context.clone()).or_default().push(counts);
    }
    let summarize = |counts: &[AgreementCounts]| match aggregation {
        Aggregation::Pooled => {
            let mut total = AgreementCounts::default();
            counts.iter().for_each(|c| total.merge(c));
            total.ratios()
        }
        Aggregation::MacroDocument => {
            macro_average(&counts.iter().map(|c| c.ratios()).collect::<Vec<_>>())
        }
    };
    let all: Vec<AgreementCounts> = per_context.values().flatten().copied().collect();
    Ok(AgreementReport {
        contexts: per_context
            .iter()
            .map(|(k, v)| (k.clone(), summarize(v)))
            .collect(),
        overall: summarize(&all),
    })
}
