//! Builds a binary sentence-vector store with the hashing embedder, writes
//! it, reads it back and averages one document.
//!
//! cargo run --example embedding_store

use lexseg::embed::{document_average, EmbeddingProvider, EmbeddingStore, HashingEmbedder};
use lexseg::synthetic::{generate, SyntheticSpec};

fn main() -> lexseg::Result<()> {
    let docs = generate(&SyntheticSpec {
        docs_per_context: 3,
        ..SyntheticSpec::default()
    });
    let store = EmbeddingStore::from_provider(&docs, &HashingEmbedder::new(32, 1))?;
    let path = std::env::temp_dir().join("lexseg-example-store.bin");
    store.write(&path)?;
    let loaded = EmbeddingStore::read(&path)?;
    println!(
        "{} vectors of width {} ({} bytes on disk)",
        loaded.len(),
        loaded.dim(),
        std::fs::metadata(&path)?.len()
    );
    let first = loaded.sentence_vector(&docs[0], 0)?;
    let active = first.iter().filter(|x| **x != 0.0).count();
    println!("{}: {active} non-zero buckets of {}", docs[0].sentence_key(0), first.len());
    let mean = document_average(&docs[0], &loaded)?;
    println!("average of {} sentences, norm {:.4}", docs[0].len(), mean.iter().map(|x| x * x).sum::<f64>().sqrt());
    std::fs::remove_file(path)?;
    Ok(())
}
