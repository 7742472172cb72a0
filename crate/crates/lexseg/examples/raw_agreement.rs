//! Character-level agreement between two annotators on a shared document.
//!
//! cargo run --example raw_agreement

use lexseg::agreement::{raw_agreement, Aggregation};
use lexseg::corpus::{RawDocument, Span, SpanType};

fn main() -> lexseg::Result<()> {
    let text = "HEADER The facts are these. We consider the law. Dismissed.".to_string();
    let layer = |who: &str, analysis_start: usize| {
        vec![
            Span::new(0, 6, SpanType::Heading, who),
            Span::new(7, analysis_start, SpanType::Background, who),
            Span::new(analysis_start, 48, SpanType::Analysis, who),
            Span::new(49, 59, SpanType::Outcome, who),
        ]
    };
    let mut spans = layer("first", 28);
    spans.extend(layer("second", 20));
    let doc = RawDocument {
        id: "d1".into(),
        context: "demo".into(),
        text,
        spans,
    };
    let report = raw_agreement(&[doc], "first", "second", Aggregation::Pooled)?;
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}
