//! Span-annotated decisions and their conversion into labeled sentence
//! sequences.
//!
//! A [`RawDocument`] carries the full text of a decision together with typed
//! character-offset spans from one or more annotators. Offsets count Unicode
//! scalar values, not bytes. [`preprocess`] strips the non-body spans and
//! [`label_document`] turns what remains into a [`LabeledDocument`], one
//! labeled sentence at a time.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of sentences in a document.
pub const DEFAULT_MAX_SENTENCES: usize = 1080;

/// The six annotation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpanType {
    OutOfScope,
    Heading,
    IntroductorySummary,
    Background,
    Analysis,
    Outcome,
}

impl SpanType {
    pub const ALL: [SpanType; 6] = [
        SpanType::OutOfScope,
        SpanType::Heading,
        SpanType::IntroductorySummary,
        SpanType::Background,
        SpanType::Analysis,
        SpanType::Outcome,
    ];

    /// The predicted subset, if `self` belongs to it.
    pub fn label(self) -> Option<Label> {
        match self {
            SpanType::Background => Some(Label::Background),
            SpanType::Analysis => Some(Label::Analysis),
            SpanType::Outcome => Some(Label::Outcome),
            _ => None,
        }
    }

    pub fn is_predicted(self) -> bool {
        self.label().is_some()
    }

    /// Types removed before sentencizing.
    pub fn is_stripped(self) -> bool {
        matches!(self, SpanType::OutOfScope | SpanType::Heading)
    }

    pub fn name(self) -> &'static str {
        match self {
            SpanType::OutOfScope => "OutOfScope",
            SpanType::Heading => "Heading",
            SpanType::IntroductorySummary => "IntroductorySummary",
            SpanType::Background => "Background",
            SpanType::Analysis => "Analysis",
            SpanType::Outcome => "Outcome",
        }
    }
}

impl fmt::Display for SpanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the three predicted sentence labels. The discriminant is the class
/// index used by the model and the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Background = 0,
    Analysis = 1,
    Outcome = 2,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Background, Label::Analysis, Label::Outcome];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        Label::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Background => "Background",
            Label::Analysis => "Analysis",
            Label::Outcome => "Outcome",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Background" => Ok(Label::Background),
            "Analysis" => Ok(Label::Analysis),
            "Outcome" => Ok(Label::Outcome),
            other => Err(Error::Invalid(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub kind: SpanType,
    pub annotator: String,
}

impl Span {
    pub fn new(start: usize, end: usize, kind: SpanType, annotator: impl Into<String>) -> Self {
        Span {
            start,
            end,
            kind,
            annotator: annotator.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub context: String,
    pub text: String,
    pub spans: Vec<Span>,
}

impl RawDocument {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn annotators(&self) -> BTreeSet<&str> {
        self.spans.iter().map(|s| s.annotator.as_str()).collect()
    }

    /// Spans of one annotator ordered by start offset.
    pub fn layer(&self, annotator: &str) -> Vec<&Span> {
        let mut spans: Vec<&Span> = self
            .spans
            .iter()
            .filter(|s| s.annotator == annotator)
            .collect();
        spans.sort_by_key(|s| (s.start, s.end));
        spans
    }

    /// Checks offsets and per-annotator overlap.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Invalid("document with empty id".into()));
        }
        if self.context.is_empty() {
            return Err(Error::Invalid(format!("document {}: empty context", self.id)));
        }
        let len = self.char_len();
        for span in &self.spans {
            if span.start >= span.end || span.end > len {
                return Err(Error::SpanOutOfRange {
                    doc: self.id.clone(),
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
        }
        for annotator in self.annotators() {
            let layer = self.layer(annotator);
            for pair in layer.windows(2) {
                if pair[1].start < pair[0].end {
                    return Err(Error::SpanOverlap {
                        doc: self.id.clone(),
                        annotator: annotator.to_string(),
                        first_start: pair[0].start,
                        first_end: pair[0].end,
                        second_start: pair[1].start,
                        second_end: pair[1].end,
                    });
                }
            }
        }
        Ok(())
    }

    /// Resolves which annotation layer to use: the explicit choice if given,
    /// otherwise the only annotator present. Multiple annotators without an
    /// explicit choice is an error.
    pub fn pick_annotator<'a>(&'a self, explicit: Option<&'a str>) -> Result<&'a str> {
        let present = self.annotators();
        match explicit {
            Some(name) if present.contains(name) => Ok(name),
            Some(name) => Err(Error::MissingAnnotator {
                doc: self.id.clone(),
                annotator: name.to_string(),
            }),
            None if present.len() == 1 => Ok(present.into_iter().next().unwrap()),
            None if present.is_empty() => Err(Error::Invalid(format!(
                "document {} has no annotations",
                self.id
            ))),
            None => Err(Error::Invalid(format!(
                "document {} has annotators {:?}; pick one explicitly",
                self.id, present
            ))),
        }
    }
}

/// Parses a JSON-lines corpus from any reader. `origin` only labels errors.
pub fn parse_corpus<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?;
        doc.validate()?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateDocument(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Reads and validates a corpus file.
pub fn load_and_validate(path: &Path) -> Result<Vec<RawDocument>> {
    let file = File::open(path)?;
    parse_corpus(BufReader::new(file), path)
}

/// A contiguous piece of body text carrying one surviving annotation type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub kind: SpanType,
}

impl Segment {
    /// Introductory summaries are kept by [`preprocess`] but never labeled.
    pub fn label(&self) -> Option<Label> {
        self.kind.label()
    }
}

/// Removes out-of-scope and heading spans and returns the remaining annotated
/// ranges of `annotator` in document order. Unannotated text is dropped.
pub fn preprocess(doc: &RawDocument, annotator: &str) -> Result<Vec<Segment>> {
    if !doc.spans.iter().any(|s| s.annotator == annotator) {
        return Err(Error::MissingAnnotator {
            doc: doc.id.clone(),
            annotator: annotator.to_string(),
        });
    }
    let chars: Vec<char> = doc.text.chars().collect();
    let segments = doc
        .layer(annotator)
        .into_iter()
        .filter(|span| !span.kind.is_stripped())
        .filter_map(|span| {
            let text: String = chars[span.start..span.end].iter().collect();
            let text = text.trim();
            (!text.is_empty()).then(|| Segment {
                text: text.to_string(),
                kind: span.kind,
            })
        })
        .collect();
    Ok(segments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Split after `.`, `!` or `?` when followed by whitespace and then a
    /// capital letter or a line break.
    #[default]
    Terminator,
    /// Terminator rules plus a break after every `;`.
    Semicolon,
    /// Input already holds one sentence per line.
    PreSplit,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "terminator" => Ok(SplitMode::Terminator),
            "semicolon" => Ok(SplitMode::Semicolon),
            "pre_split" | "pre-split" => Ok(SplitMode::PreSplit),
            other => Err(Error::Invalid(format!("unknown split mode {other:?}"))),
        }
    }
}

/// Tokens ending in a period that never end a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "v.", "vs.", "No.", "no.", "Nos.", "Art.", "art.", "Arts.", "Mr.", "Mrs.", "Ms.", "Dr.",
    "Inc.", "Ltd.", "Co.", "Corp.", "Jr.", "St.", "e.g.", "i.e.", "cf.", "para.", "paras.", "p.",
    "pp.", "Sec.", "sec.", "Nr.", "Abs.", "Rn.", "ust.", "odst.", "cit.",
];

/// Rule-based sentence splitter.
#[derive(Debug, Clone)]
pub struct Sentencizer {
    pub mode: SplitMode,
    abbreviations: HashSet<String>,
}

impl Default for Sentencizer {
    fn default() -> Self {
        Sentencizer::new(SplitMode::Terminator)
    }
}

impl Sentencizer {
    pub fn new(mode: SplitMode) -> Self {
        Sentencizer {
            mode,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn with_abbreviations<I, S>(mut self, abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.abbreviations = abbreviations.into_iter().map(Into::into).collect();
        self
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        if self.mode == SplitMode::PreSplit {
            return text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
        }
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let mut cut = None;
            if c == ';' && self.mode == SplitMode::Semicolon {
                cut = Some(i + 1);
            } else if matches!(c, '.' | '!' | '?') {
                // absorb runs like "?!" or closing quotes/brackets
                let mut j = i + 1;
                while j < chars.len() && matches!(chars[j], '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '»' | '”' | '’') {
                    j += 1;
                }
                if self.is_boundary(&chars, start, i, j) {
                    cut = Some(j);
                }
                i = j - 1;
            }
            if let Some(end) = cut {
                push_trimmed(&mut out, &chars[start..end]);
                start = end;
            }
            i += 1;
        }
        push_trimmed(&mut out, &chars[start..]);
        out
    }

    /// `term` is the terminator position, `after` the index past the
    /// absorbed punctuation.
    fn is_boundary(&self, chars: &[char], start: usize, term: usize, after: usize) -> bool {
        if chars[term] == '.' {
            let token_start = chars[start..term]
                .iter()
                .rposition(|c| c.is_whitespace())
                .map_or(start, |p| start + p + 1);
            let token: String = chars[token_start..=term].iter().collect();
            if self.abbreviations.contains(&token) {
                return false;
            }
        }
        if after >= chars.len() {
            return true;
        }
        let mut k = after;
        let mut newline = false;
        while k < chars.len() && chars[k].is_whitespace() {
            newline |= chars[k] == '\n';
            k += 1;
        }
        if k == after {
            return false;
        }
        newline || k == chars.len() || chars[k].is_uppercase()
    }
}

fn push_trimmed(out: &mut Vec<String>, chars: &[char]) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Splits `text` with the default abbreviation list.
pub fn sentencize(text: &str, mode: SplitMode) -> Vec<String> {
    Sentencizer::new(mode).split(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub text: String,
    pub label: Label,
    #[serde(skip)]
    pub doc_position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub context: String,
    pub sentences: Vec<SentenceRecord>,
}

impl LabeledDocument {
    /// Builds a document from `(text, label)` pairs, numbering positions.
    pub fn new<I, S>(id: impl Into<String>, context: impl Into<String>, sentences: I) -> Self
    where
        I: IntoIterator<Item = (S, Label)>,
        S: Into<String>,
    {
        let sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(doc_position, (text, label))| SentenceRecord {
                text: text.into(),
                label,
                doc_position,
            })
            .collect();
        LabeledDocument {
            id: id.into(),
            context: context.into(),
            sentences,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.sentences.iter().map(|s| s.label).collect()
    }

    /// Key under which a sentence vector is kept in an embedding store.
    pub fn sentence_key(&self, position: usize) -> String {
        format!("{}:{}", self.id, position)
    }

    fn renumber(&mut self) {
        for (i, s) in self.sentences.iter_mut().enumerate() {
            s.doc_position = i;
        }
    }
}

/// Options for turning a raw document into labeled sentences.
#[derive(Debug, Clone)]
pub struct LabelOptions {
    pub annotator: Option<String>,
    pub sentencizer: Sentencizer,
    pub max_sentences: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            annotator: None,
            sentencizer: Sentencizer::default(),
            max_sentences: DEFAULT_MAX_SENTENCES,
        }
    }
}

/// Preprocesses, drops introductory summaries, and sentencizes each segment.
pub fn label_document(doc: &RawDocument, options: &LabelOptions) -> Result<LabeledDocument> {
    let annotator = doc.pick_annotator(options.annotator.as_deref())?;
    let mut sentences = Vec::new();
    for segment in preprocess(doc, annotator)? {
        let Some(label) = segment.label() else {
            continue;
        };
        for text in options.sentencizer.split(&segment.text) {
            sentences.push((text, label));
        }
    }
    if sentences.is_empty() {
        return Err(Error::Invalid(format!(
            "document {} has no labeled sentences after preprocessing",
            doc.id
        )));
    }
    if sentences.len() > options.max_sentences {
        return Err(Error::DocumentTooLong {
            doc: doc.id.clone(),
            len: sentences.len(),
            max: options.max_sentences,
        });
    }
    Ok(LabeledDocument::new(doc.id.clone(), doc.context.clone(), sentences))
}

pub fn write_labeled(path: &Path, docs: &[LabeledDocument]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledDocument>> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: LabeledDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?;
        if doc.sentences.is_empty() {
            return Err(Error::Invalid(format!("document {} has no sentences", doc.id)));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateDocument(doc.id));
        }
        doc.renumber();
        docs.push(doc);
    }
    Ok(docs)
}

/// Descriptive counts for one context or the whole corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextStats {
    pub documents: usize,
    pub sentences: usize,
    pub avg_len: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Indexed by [`Label::index`].
    pub label_counts: [usize; 3],
}

impl ContextStats {
    fn from_lengths<'a>(docs: impl Iterator<Item = &'a LabeledDocument>) -> Self {
        let mut stats = ContextStats {
            documents: 0,
            sentences: 0,
            avg_len: 0.0,
            min_len: usize::MAX,
            max_len: 0,
            label_counts: [0; 3],
        };
        for doc in docs {
            stats.documents += 1;
            stats.sentences += doc.len();
            stats.min_len = stats.min_len.min(doc.len());
            stats.max_len = stats.max_len.max(doc.len());
            for s in &doc.sentences {
                stats.label_counts[s.label.index()] += 1;
            }
        }
        stats.avg_len = stats.sentences as f64 / stats.documents as f64;
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub contexts: BTreeMap<String, ContextStats>,
    pub overall: ContextStats,
}

impl CorpusStats {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "context", "docs", "sentences", "avg", "min", "max", "background", "analysis",
            "outcome",
        ])?;
        let rows = self
            .contexts
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once(("overall", &self.overall)));
        for (name, s) in rows {
            w.write_record([
                name.to_string(),
                s.documents.to_string(),
                s.sentences.to_string(),
                format!("{:.1}", s.avg_len),
                s.min_len.to_string(),
                s.max_len.to_string(),
                s.label_counts[0].to_string(),
                s.label_counts[1].to_string(),
                s.label_counts[2].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn corpus_statistics(docs: &[LabeledDocument]) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::Invalid("empty corpus".into()));
    }
    let mut by_context: BTreeMap<&str, Vec<&LabeledDocument>> = BTreeMap::new();
    for doc in docs {
        by_context.entry(doc.context.as_str()).or_default().push(doc);
    }
    let contexts = by_context
        .into_iter()
        .map(|(k, v)| (k.to_string(), ContextStats::from_lengths(v.into_iter())))
        .collect();
    Ok(CorpusStats {
        contexts,
        overall: ContextStats::from_lengths(docs.iter()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(text: &str, spans: Vec<Span>) -> RawDocument {
        RawDocument {
            id: "d1".into(),
            context: "canada".into(),
            text: text.into(),
            spans,
        }
    }

    #[test]
    fn minimal_line_parses() {
        let line = r#"{"id":"d1","context":"canada","text":"Facts.","spans":[{"start":0,"end":6,"type":"Background","annotator":"a"}]}"#;
        let docs = parse_corpus(line.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].spans.len(), 1);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "\n{\"id\": 3}\n";
        match parse_corpus(text.as_bytes(), Path::new("c.jsonl")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = r#"{"id":"d1","context":"c","text":"x","spans":[]}"#;
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            parse_corpus(text.as_bytes(), Path::new("m")),
            Err(Error::DuplicateDocument(_))
        ));
    }

    #[test]
    fn out_of_range_span() {
        let d = doc("short", vec![Span::new(0, 6, SpanType::Background, "a")]);
        assert!(matches!(d.validate(), Err(Error::SpanOutOfRange { .. })));
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        let d = doc("čšž", vec![Span::new(0, 3, SpanType::Background, "a")]);
        d.validate().unwrap();
        let segs = preprocess(&d, "a").unwrap();
        assert_eq!(segs[0].text, "čšž");
    }

    #[test]
    fn overlap_same_annotator() {
        let d = doc(
            "0123456789abcdefghij",
            vec![
                Span::new(0, 10, SpanType::Background, "a"),
                Span::new(5, 15, SpanType::Background, "a"),
            ],
        );
        match d.validate() {
            Err(Error::SpanOverlap {
                annotator,
                second_start,
                ..
            }) => {
                assert_eq!(annotator, "a");
                assert_eq!(second_start, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        // different annotators may overlap
        let d = doc(
            "0123456789abcdefghij",
            vec![
                Span::new(0, 10, SpanType::Background, "a"),
                Span::new(5, 15, SpanType::Background, "b"),
            ],
        );
        d.validate().unwrap();
    }

    #[test]
    fn heading_is_stripped() {
        let d = doc(
            "HEADER body",
            vec![
                Span::new(0, 7, SpanType::Heading, "a"),
                Span::new(7, 11, SpanType::Background, "a"),
            ],
        );
        let segs = preprocess(&d, "a").unwrap();
        assert_eq!(
            segs,
            vec![Segment {
                text: "body".into(),
                kind: SpanType::Background
            }]
        );
    }

    #[test]
    fn order_is_preserved() {
        let d = doc(
            "aaaaabbbbbHHoooooooo",
            vec![
                Span::new(12, 20, SpanType::Outcome, "a"),
                Span::new(0, 5, SpanType::Background, "a"),
                Span::new(10, 12, SpanType::Heading, "a"),
                Span::new(5, 10, SpanType::Analysis, "a"),
            ],
        );
        let kinds: Vec<_> = preprocess(&d, "a").unwrap().into_iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![SpanType::Background, SpanType::Analysis, SpanType::Outcome]
        );
    }

    #[test]
    fn only_out_of_scope_is_empty() {
        let d = doc("noise here", vec![Span::new(0, 10, SpanType::OutOfScope, "a")]);
        assert!(preprocess(&d, "a").unwrap().is_empty());
    }

    #[test]
    fn summary_kept_by_preprocess_but_not_labeled() {
        let d = doc(
            "Summary. Facts here.",
            vec![
                Span::new(0, 8, SpanType::IntroductorySummary, "a"),
                Span::new(9, 20, SpanType::Background, "a"),
            ],
        );
        assert_eq!(preprocess(&d, "a").unwrap().len(), 2);
        let labeled = label_document(&d, &LabelOptions::default()).unwrap();
        assert_eq!(labeled.len(), 1);
        assert_eq!(labeled.sentences[0].label, Label::Background);
    }

    #[test]
    fn annotator_must_be_explicit_when_ambiguous() {
        let d = doc(
            "abc",
            vec![
                Span::new(0, 3, SpanType::Background, "a"),
                Span::new(0, 3, SpanType::Analysis, "b"),
            ],
        );
        assert!(d.pick_annotator(None).is_err());
        assert_eq!(d.pick_annotator(Some("b")).unwrap(), "b");
        assert!(matches!(
            d.pick_annotator(Some("c")),
            Err(Error::MissingAnnotator { .. })
        ));
    }

    #[test]
    fn too_long_rejected() {
        let d = doc("A a. B b. C c.", vec![Span::new(0, 14, SpanType::Analysis, "a")]);
        let options = LabelOptions {
            max_sentences: 2,
            ..LabelOptions::default()
        };
        assert!(matches!(
            label_document(&d, &options),
            Err(Error::DocumentTooLong { len: 3, .. })
        ));
    }

    #[test]
    fn terminator_split() {
        assert_eq!(sentencize("A b. C d.", SplitMode::Terminator), vec!["A b.", "C d."]);
        assert_eq!(
            sentencize("No terminator here", SplitMode::Terminator),
            vec!["No terminator here"]
        );
        assert_eq!(
            sentencize("Smith v. Jones held. It ended.", SplitMode::Terminator),
            vec!["Smith v. Jones held.", "It ended."]
        );
        assert_eq!(
            sentencize("costs were 3.5 percent. lower case follows", SplitMode::Terminator),
            vec!["costs were 3.5 percent. lower case follows"]
        );
        assert_eq!(
            sentencize("Why? Because.\nnext line", SplitMode::Terminator),
            vec!["Why?", "Because.", "next line"]
        );
    }

    #[test]
    fn semicolon_split() {
        let s = sentencize("attendu que X ; attendu que Y ;", SplitMode::Semicolon);
        assert_eq!(s, vec!["attendu que X ;", "attendu que Y ;"]);
        assert_eq!(
            sentencize("attendu que X ; attendu que Y ;", SplitMode::Terminator).len(),
            1
        );
    }

    #[test]
    fn pre_split_lines() {
        assert_eq!(
            sentencize("one.\n\n two \nthree", SplitMode::PreSplit),
            vec!["one.", "two", "three"]
        );
    }

    #[test]
    fn statistics_single_doc() {
        use Label::*;
        let d = LabeledDocument::new(
            "d",
            "c",
            [("a", Background), ("b", Background), ("c", Analysis), ("d", Outcome)],
        );
        let stats = corpus_statistics(&[d]).unwrap();
        assert_eq!(stats.overall.label_counts, [2, 1, 1]);
        assert_eq!(stats.overall.avg_len, 4.0);
        assert_eq!(stats.contexts["c"], stats.overall);
        assert!(corpus_statistics(&[]).is_err());
    }

    #[test]
    fn overall_row_aggregates_contexts() {
        use Label::*;
        let docs = vec![
            LabeledDocument::new("a", "x", [("s", Background), ("t", Outcome)]),
            LabeledDocument::new("b", "y", [("s", Analysis)]),
            LabeledDocument::new("c", "y", [("s", Analysis), ("t", Analysis), ("u", Outcome)]),
        ];
        let stats = corpus_statistics(&docs).unwrap();
        let docs_sum: usize = stats.contexts.values().map(|c| c.documents).sum();
        let sent_sum: usize = stats.contexts.values().map(|c| c.sentences).sum();
        assert_eq!(docs_sum, stats.overall.documents);
        assert_eq!(sent_sum, stats.overall.sentences);
        assert_eq!(stats.overall.min_len, 1);
        assert_eq!(stats.overall.max_len, 3);
        assert_eq!(stats.overall.label_counts, [1, 3, 2]);
    }

    fn strip_ws(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    fn arb_layer() -> impl Strategy<Value = RawDocument> {
        let kinds = prop::sample::select(SpanType::ALL.to_vec());
        prop::collection::vec((1usize..8, 0usize..3, kinds), 0..8).prop_map(|parts| {
            let mut text = String::new();
            let mut spans = Vec::new();
            for (i, (len, gap, kind)) in parts.into_iter().enumerate() {
                let start = text.chars().count() + gap;
                text.push_str(&" ".repeat(gap));
                text.push_str(&format!("{}", i).repeat(len));
                spans.push(Span::new(start, start + len.max(1) * format!("{i}").len(), kind, "a"));
            }
            text.push('.');
            spans.push(Span::new(text.chars().count() - 1, text.chars().count(), SpanType::OutOfScope, "a"));
            RawDocument {
                id: "p".into(),
                context: "c".into(),
                text,
                spans,
            }
        })
    }

    proptest! {
        #[test]
        fn sentencize_preserves_content(text in "[A-Za-z .!?;\n]{0,80}") {
            for mode in [SplitMode::Terminator, SplitMode::Semicolon, SplitMode::PreSplit] {
                let parts = sentencize(&text, mode);
                prop_assert_eq!(strip_ws(&parts.concat()), strip_ws(&text));
                prop_assert!(parts.iter().all(|p| !p.trim().is_empty()));
            }
        }

        #[test]
        fn preprocess_is_idempotent(d in arb_layer()) {
            d.validate().unwrap();
            let segments = preprocess(&d, "a").unwrap();
            // reconstitute the segments as an adjacent span layer
            let mut text = String::new();
            let mut spans = Vec::new();
            for seg in &segments {
                let start = text.chars().count();
                text.push_str(&seg.text);
                spans.push(Span::new(start, text.chars().count(), seg.kind, "a"));
            }
            prop_assume!(!spans.is_empty());
            let again = RawDocument { id: "p".into(), context: "c".into(), text, spans };
            again.validate().unwrap();
            prop_assert_eq!(preprocess(&again, "a").unwrap(), segments.clone());
            prop_assert!(segments.iter().all(|s| !s.kind.is_stripped()));
        }
    }
}
