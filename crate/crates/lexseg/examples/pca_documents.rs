//! Projects document-average vectors onto their first two principal
//! components and writes the scatter as SVG.
//!
//! cargo run --example pca_documents

use lexseg::analysis::pca_2d;
use lexseg::embed::{document_average, HashingEmbedder};
use lexseg::synthetic::{generate, SyntheticSpec};

fn main() -> lexseg::Result<()> {
    let docs = generate(&SyntheticSpec {
        docs_per_context: 25,
        ..SyntheticSpec::default()
    });
    let provider = HashingEmbedder::new(128, 0);
    let vectors = docs
        .iter()
        .map(|d| document_average(d, &provider))
        .collect::<lexseg::Result<Vec<_>>>()?;
    let (model, points) = pca_2d(&vectors)?;
    let [r1, r2] = model.explained_ratio();
    println!("explained variance ratio {r1:.3} / {r2:.3}");
    for context in ["alpha", "beta", "gamma"] {
        let mine: Vec<&[f64; 2]> = docs.iter().zip(&points).filter(|(d, _)| d.context == context).map(|(_, p)| p).collect();
        let cx = mine.iter().map(|p| p[0]).sum::<f64>() / mine.len() as f64;
        let cy = mine.iter().map(|p| p[1]).sum::<f64>() / mine.len() as f64;
        println!("{context:<6} centroid ({cx:+.4}, {cy:+.4})");
    }
    let path = std::env::temp_dir().join("lexseg-pca.svg");
    std::fs::write(&path, lexseg::svg::pca_scatter(&docs, &points))?;
    println!("scatter written to {}", path.display());
    Ok(())
}
