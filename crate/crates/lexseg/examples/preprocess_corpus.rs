//! Turns span-annotated decisions into labeled sentences and prints the
//! per-context statistics.
//!
//! cargo run --example preprocess_corpus

use lexseg::corpus::{corpus_statistics, label_document, LabelOptions, RawDocument, Span, SpanType};

/// Joins sections with newlines and records one span per section.
fn annotate(id: &str, context: &str, sections: &[(SpanType, &str)]) -> RawDocument {
    let mut text = String::new();
    let mut spans = Vec::new();
    for (kind, body) in sections {
        if !text.is_empty() {
            text.push('\n');
        }
        let start = text.chars().count();
        text.push_str(body);
        spans.push(Span::new(start, text.chars().count(), *kind, "a"));
    }
    RawDocument {
        id: id.into(),
        context: context.into(),
        text,
        spans,
    }
}

fn main() -> lexseg::Result<()> {
    let raw = [
        annotate(
            "ca-1",
            "canada",
            &[
                (SpanType::Heading, "R. v. Smith"),
                (SpanType::Background, "The appellant was convicted in 2019. He appealed."),
                (SpanType::Analysis, "The trial judge erred in law."),
                (SpanType::Outcome, "Appeal allowed."),
            ],
        ),
        annotate(
            "de-1",
            "germany",
            &[
                (SpanType::Outcome, "Die Revision wird zurückgewiesen."),
                (SpanType::Background, "Der Kläger rügt einen Verstoß gegen Art. 3 GG."),
                (SpanType::Analysis, "Die Rüge greift nicht durch. Das Urteil ist richtig."),
                (SpanType::OutOfScope, "Müller    Schmidt    Weber"),
            ],
        ),
    ];
    println!("{}", serde_json::to_string(&raw[0])?);
    let options = LabelOptions::default();
    let docs = raw.iter().map(|d| label_document(d, &options)).collect::<lexseg::Result<Vec<_>>>()?;
    for doc in &docs {
        println!("{} ({})", doc.id, doc.context);
        for s in &doc.sentences {
            println!("  {:<10} {}", s.label.name(), s.text);
        }
    }
    corpus_statistics(&docs)?.write_csv(std::io::stdout().lock())?;
    Ok(())
}
