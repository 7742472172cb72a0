use crate::corpus::LabeledDocument;
use crate::error::Result;

use super::EmbeddingProvider;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the bytes with the seed folded into the offset basis,
/// finished with the splitmix64 mixer. Stable across platforms and releases.
pub fn stable_hash(bytes: &[u8], seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing into `dim` buckets, L2-normalized.
pub fn hashing_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim >= 1, "dimension must be positive");
    let mut v = vec![0.0; dim];
    for token in tokenize(text) {
        let h = stable_hash(token.as_bytes(), seed);
        let bucket = (h % dim as u64) as usize;
        v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashingEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        HashingEmbedder { dim, seed }
    }

    pub fn embed(&self, text: &str) -> Vec<f64> {
        hashing_embed(text, self.dim, self.seed)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sentence_vector(&self, doc: &LabeledDocument, position: usize) -> Result<Vec<f64>> {
        match doc.sentences.get(position) {
            Some(s) => Ok(self.embed(&s.text)),
            None => Err(crate::Error::MissingEmbedding(doc.sentence_key(position))),
        }
    }
}
