//! Minimal SVG rendering for the PCA scatter and the label-position heatmap.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analysis::LabelDistributionGrid;
use crate::corpus::{Label, LabeledDocument};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn label_colour(label: Label) -> &'static str {
    match label {
        Label::Background => "#4c78a8",
        Label::Analysis => "#f2cf5b",
        Label::Outcome => "#e45756",
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of 2-D document projections, one colour per context.
pub fn pca_scatter(docs: &[LabeledDocument], points: &[[f64; 2]]) -> String {
    let (width, height, margin) = (640.0, 480.0, 40.0);
    let bound = |axis: usize| {
        let lo = points.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 1.0, lo + 1.0) }
    };
    let (x0, x1) = bound(0);
    let (y0, y1) = bound(1);
    let colours: BTreeMap<&str, &str> = docs
        .iter()
        .map(|d| d.context.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, PALETTE[i % PALETTE.len()]))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (doc, p) in docs.iter().zip(points) {
        let x = margin + (p[0] - x0) / (x1 - x0) * (width - 2.0 * margin);
        let y = height - margin - (p[1] - y0) / (y1 - y0) * (height - 2.0 * margin);
        let _ = writeln!(
            svg,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}" fill-opacity="0.7"><title>{}</title></circle>"#,
            colours[doc.context.as_str()],
            escape(&doc.id)
        );
    }
    for (i, (context, colour)) in colours.iter().enumerate() {
        let y = 16.0 + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<rect x="8" y="{:.0}" width="10" height="10" fill="{colour}"/>"#, y - 9.0);
        let _ = writeln!(svg, r#"<text x="22" y="{y:.0}" font-size="12" font-family="sans-serif">{}</text>"#, escape(context));
    }
    svg.push_str("</svg>\n");
    svg
}

/// One row per document, one cell per position bin, coloured by label.
pub fn label_heatmap(grid: &LabelDistributionGrid, context: &str) -> Option<String> {
    let rows = grid.contexts.get(context)?;
    let cell_w = (600.0 / grid.resolution as f64).max(1.0);
    let cell_h = 4.0;
    let width = cell_w * grid.resolution as f64;
    let height = cell_h * rows.len() as f64 + 20.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<text x="2" y="14" font-size="12" font-family="sans-serif">{}</text>"#, escape(context));
    for (r, (_, labels)) in rows.iter().enumerate() {
        let y = 20.0 + cell_h * r as f64;
        // Merge runs of equal labels into one rectangle.
        let mut start = 0;
        while start < labels.len() {
            let mut end = start + 1;
            while end < labels.len() && labels[end] == labels[start] {
                end += 1;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{cell_h}" fill="{}"/>"#,
                start as f64 * cell_w,
                (end - start) as f64 * cell_w,
                label_colour(labels[start])
            );
            start = end;
        }
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::label_position_distribution;

    #[test]
    fn heatmap_merges_runs() {
        let doc = LabeledDocument::new(
            "d",
            "c",
            [("a", Label::Background), ("b", Label::Background), ("c", Label::Outcome)],
        );
        let grid = label_position_distribution(&[doc], 3).unwrap();
        let svg = label_heatmap(&grid, "c").unwrap();
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(label_heatmap(&grid, "missing").is_none());
    }

    #[test]
    fn scatter_has_one_point_per_document() {
        let docs: Vec<LabeledDocument> = (0..4)
            .map(|i| LabeledDocument::new(format!("d{i}"), if i < 2 { "a" } else { "b<" }, [("s", Label::Analysis)]))
            .collect();
        let points = [[0.0, 0.0], [1.0, 2.0], [2.0, 1.0], [3.0, 3.0]];
        let svg = pca_scatter(&docs, &points);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("b&lt;"));
    }
}
