//! Generated corpora for self-contained runs.
//!
//! Every sentence mixes words from a label vocabulary shared by all contexts
//! with words from a vocabulary owned by its context that carries no label
//! signal. A model that learns the shared core transfers across contexts; the
//! noise words make each context look different to the embedder.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledDocument, RawDocument, Span, SpanType};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub contexts: Vec<String>,
    pub docs_per_context: usize,
    /// Inclusive sentence-count range per document.
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Words per label in the shared vocabulary.
    pub core_vocabulary: usize,
    /// Words per context in the noise vocabulary.
    pub noise_vocabulary: usize,
    pub core_words_per_sentence: usize,
    pub noise_words_per_sentence: usize,
    /// Probability that a core word is drawn from another label's vocabulary.
    pub confusion: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            contexts: vec!["alpha".into(), "beta".into(), "gamma".into()],
            docs_per_context: 60,
            min_sentences: 6,
            max_sentences: 18,
            core_vocabulary: 12,
            noise_vocabulary: 40,
            core_words_per_sentence: 3,
            noise_words_per_sentence: 4,
            confusion: 0.1,
            seed: 7,
        }
    }
}

fn core_word(label: Label, i: usize) -> String {
    const STEMS: [&str; 3] = ["fact", "reason", "order"];
    format!("{}{}x", STEMS[label.index()], i)
}

fn noise_word(context: &str, i: usize) -> String {
    let stem: String = context.chars().filter(|c| c.is_alphanumeric()).collect();
    format!("{stem}q{i}")
}

/// Background, then Analysis, then Outcome, with section shares varying by
/// context so label proportions differ between contexts.
fn section_labels(len: usize, context_index: usize, rng: &mut ChaCha8Rng) -> Vec<Label> {
    let background_share = 0.2 + 0.1 * (context_index % 3) as f64 + rng.gen_range(-0.05..0.05);
    let outcome = 1 + usize::from(rng.gen_bool(0.3));
    let background = ((len as f64 * background_share).round() as usize).clamp(1, len.saturating_sub(outcome + 1).max(1));
    (0..len)
        .map(|t| {
            if t < background {
                Label::Background
            } else if t + outcome >= len {
                Label::Outcome
            } else {
                Label::Analysis
            }
        })
        .collect()
}

pub fn generate(spec: &SyntheticSpec) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let other = WeightedIndex::new([1.0, 1.0]).unwrap();
    let mut docs = Vec::new();
    for (ci, context) in spec.contexts.iter().enumerate() {
        for d in 0..spec.docs_per_context {
            let len = rng.gen_range(spec.min_sentences..=spec.max_sentences);
            let labels = section_labels(len, ci, &mut rng);
            let sentences: Vec<(String, Label)> = labels
                .into_iter()
                .map(|label| {
                    let mut words = Vec::new();
                    for _ in 0..spec.core_words_per_sentence {
                        let source = if rng.gen_bool(spec.confusion) {
                            let shift = 1 + other.sample(&mut rng);
                            Label::ALL[(label.index() + shift) % 3]
                        } else {
                            label
                        };
                        words.push(core_word(source, rng.gen_range(0..spec.core_vocabulary)));
                    }
                    for _ in 0..spec.noise_words_per_sentence {
                        words.push(noise_word(context, rng.gen_range(0..spec.noise_vocabulary)));
                    }
                    // shuffle word order
                    for i in (1..words.len()).rev() {
                        words.swap(i, rng.gen_range(0..=i));
                    }
                    let mut text = words.join(" ");
                    text[..1].make_ascii_uppercase();
                    text.push('.');
                    (text, label)
                })
                .collect();
            docs.push(LabeledDocument::new(format!("{context}-{d:03}"), context.clone(), sentences));
        }
    }
    docs
}

/// Renders a labeled document as an annotated raw decision: a heading and a
/// trailing out-of-scope block around one span per labeled section.
pub fn to_raw_document(doc: &LabeledDocument, annotator: &str) -> RawDocument {
    let mut text = String::new();
    let mut spans = Vec::new();
    let mut push = |text: &mut String, piece: &str, kind: SpanType| {
        let start = text.chars().count();
        text.push_str(piece);
        spans.push(Span::new(start, text.chars().count(), kind, annotator));
        text.push('\n');
    };
    push(&mut text, &format!("DECISION {}", doc.id.to_uppercase()), SpanType::Heading);
    let mut i = 0;
    while i < doc.len() {
        let label = doc.sentences[i].label;
        let mut j = i;
        while j < doc.len() && doc.sentences[j].label == label {
            j += 1;
        }
        let section: Vec<&str> = doc.sentences[i..j].iter().map(|s| s.text.as_str()).collect();
        let kind = match label {
            Label::Background => SpanType::Background,
            Label::Analysis => SpanType::Analysis,
            Label::Outcome => SpanType::Outcome,
        };
        push(&mut text, &section.join(" "), kind);
        i = j;
    }
    push(&mut text, "Published by the registry.", SpanType::OutOfScope);
    RawDocument {
        id: doc.id.clone(),
        context: doc.context.clone(),
        text,
        spans,
    }
}

/// `n` one-sentence documents whose labels follow `proportions` exactly up
/// to rounding, in a seeded random order.
pub fn proportional_documents(context: &str, n: usize, proportions: [f64; 3], seed: u64) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = proportions.iter().sum();
    let mut labels = Vec::with_capacity(n);
    let mut assigned = 0;
    for (c, p) in proportions.iter().enumerate() {
        let count = if c == 2 { n - assigned } else { (n as f64 * p / total).round() as usize };
        labels.extend(std::iter::repeat_n(Label::ALL[c], count));
        assigned += count;
    }
    for i in (1..labels.len()).rev() {
        labels.swap(i, rng.gen_range(0..=i));
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| LabeledDocument::new(format!("{context}-{i:05}"), context, [(format!("s{i}"), l)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{label_document, LabelOptions};

    #[test]
    fn generation_is_seeded() {
        let spec = SyntheticSpec { docs_per_context: 5, ..SyntheticSpec::default() };
        assert_eq!(generate(&spec), generate(&spec));
        let docs = generate(&spec);
        assert_eq!(docs.len(), 15);
        assert!(docs.iter().all(|d| d.len() >= 6 && d.len() <= 18));
        assert!(docs.iter().all(|d| d.sentences[0].label == Label::Background));
        assert!(docs.iter().all(|d| d.sentences.last().unwrap().label == Label::Outcome));
    }

    #[test]
    fn raw_rendering_round_trips_through_preprocessing() {
        let spec = SyntheticSpec { docs_per_context: 3, ..SyntheticSpec::default() };
        for doc in generate(&spec) {
            let raw = to_raw_document(&doc, "ann");
            raw.validate().unwrap();
            let back = label_document(&raw, &LabelOptions::default()).unwrap();
            assert_eq!(back, doc);
        }
    }

    #[test]
    fn proportions_are_exact() {
        let docs = proportional_documents("c", 1000, [0.306, 0.663, 0.031], 1);
        let count = |l| docs.iter().filter(|d| d.sentences[0].label == l).count();
        assert_eq!(count(Label::Background), 306);
        assert_eq!(count(Label::Analysis), 663);
        assert_eq!(count(Label::Outcome), 31);
    }
}
