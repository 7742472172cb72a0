//! Binary store of precomputed sentence vectors.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes   "LEXEMB01"
//! dim       u32
//! rows      u64
//! per row:  u16 key length, key bytes (UTF-8), dim × f32
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::corpus::LabeledDocument;
use crate::error::{Error, Result};

use super::EmbeddingProvider;

pub const STORE_MAGIC: &[u8; 8] = b"LEXEMB01";
const MAGIC_FAMILY: &[u8; 6] = b"LEXEMB";

/// Immutable-after-load map from `"<doc id>:<ordinal>"` to a vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector for {key} has {} values, store dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if key.len() > usize::from(u16::MAX) {
            return Err(Error::Invalid(format!("key longer than {} bytes", u16::MAX)));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("embedding {key}")));
        }
        if self.vectors.insert(key.clone(), vector).is_some() {
            return Err(Error::Invalid(format!("duplicate embedding key {key}")));
        }
        Ok(())
    }

    /// Embeds every sentence of `docs` with `provider` and keeps the result
    /// in 32-bit precision.
    pub fn from_provider(docs: &[LabeledDocument], provider: &dyn EmbeddingProvider) -> Result<Self> {
        let mut store = EmbeddingStore::new(provider.dim());
        for doc in docs {
            for position in 0..doc.len() {
                let v = provider.sentence_vector(doc, position)?;
                store.insert(doc.sentence_key(position), v.into_iter().map(|x| x as f32).collect())?;
            }
        }
        Ok(store)
    }

    /// Keys rows in corpus order: row k belongs to the k-th sentence when
    /// walking `docs` document by document.
    pub fn from_rows(docs: &[LabeledDocument], rows: Vec<Vec<f32>>) -> Result<Self> {
        let expected: usize = docs.iter().map(LabeledDocument::len).sum();
        if rows.len() != expected {
            return Err(Error::LengthMismatch(rows.len(), expected));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut store = EmbeddingStore::new(dim);
        let keys = docs
            .iter()
            .flat_map(|d| (0..d.len()).map(move |p| d.sentence_key(p)));
        for (key, row) in keys.zip(rows) {
            store.insert(key, row)?;
        }
        Ok(store)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(STORE_MAGIC)?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        for (key, vector) in &self.vectors {
            out.write_all(&(key.len() as u16).to_le_bytes())?;
            out.write_all(key.as_bytes())?;
            for x in vector {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut input, &mut magic, "header")?;
        if &magic != STORE_MAGIC {
            return Err(Error::Format(if magic.starts_with(MAGIC_FAMILY) {
                format!(
                    "unsupported store version {:?}",
                    String::from_utf8_lossy(&magic[6..])
                )
            } else {
                "bad magic, not an embedding store".to_string()
            }));
        }
        let mut word = [0u8; 4];
        read_exact(&mut input, &mut word, "header")?;
        let dim = u32::from_le_bytes(word) as usize;
        let mut long = [0u8; 8];
        read_exact(&mut input, &mut long, "header")?;
        let rows = u64::from_le_bytes(long);

        let mut store = EmbeddingStore::new(dim);
        let mut values = vec![0u8; dim * 4];
        for row in 0..rows {
            let what = format!("row {row} of {rows}");
            let mut len = [0u8; 2];
            read_exact(&mut input, &mut len, &what)?;
            let mut key = vec![0u8; usize::from(u16::from_le_bytes(len))];
            read_exact(&mut input, &mut key, &what)?;
            let key = String::from_utf8(key)
                .map_err(|_| Error::Format(format!("{what}: key is not UTF-8")))?;
            read_exact(&mut input, &mut values, &what)?;
            let vector = values
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            store.insert(key, vector)?;
        }
        let mut probe = [0u8; 1];
        if input.read(&mut probe)? != 0 {
            return Err(Error::Format(format!("trailing bytes after {rows} rows")));
        }
        Ok(store)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Reads a store and checks it has the dimension the caller expects.
    pub fn read_expecting(path: &Path, dim: usize) -> Result<Self> {
        let store = Self::read(path)?;
        if store.dim != dim {
            return Err(Error::Format(format!(
                "store dimension {} does not match expected {dim}",
                store.dim
            )));
        }
        Ok(store)
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated file while reading {what}"))
        } else {
            Error::Io(e)
        }
    })
}

impl EmbeddingProvider for EmbeddingStore {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sentence_vector(&self, doc: &LabeledDocument, position: usize) -> Result<Vec<f64>> {
        let key = doc.sentence_key(position);
        match self.vectors.get(&key) {
            Some(v) => Ok(v.iter().map(|&x| f64::from(x)).collect()),
            None => Err(Error::MissingEmbedding(key)),
        }
    }
}

/// Headerless little-endian f32 matrix with `dim` columns, the raw output
/// format of common sentence encoders.
pub fn read_raw_rows(path: &Path, dim: usize) -> Result<Vec<Vec<f32>>> {
    if dim == 0 {
        return Err(Error::Invalid("dimension must be positive".into()));
    }
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % (dim * 4) != 0 {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {dim}-dimensional f32 rows",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(dim * 4)
        .map(|row| {
            row.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect()
        })
        .collect())
}

/// One whitespace-separated vector per line.
pub fn read_text_rows(path: &Path) -> Result<Vec<Vec<f32>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(str::parse::<f32>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: index + 1,
                message: e.to_string(),
            })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(4);
        s.insert("a:0", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        s.insert("a:1", vec![-0.0, f32::MIN_POSITIVE, 1e-30, 7.5]).unwrap();
        s.insert("b:0", vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        s
    }

    fn bytes(store: &EmbeddingStore) -> Vec<u8> {
        let mut buf = Vec::new();
        store.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let store = sample();
        store.write(&path).unwrap();
        let back = EmbeddingStore::read(&path).unwrap();
        assert_eq!(bytes(&back), bytes(&store));
        assert_eq!(back.get("a:1").unwrap()[0].to_bits(), (-0.0f32).to_bits());
        assert!(EmbeddingStore::read_expecting(&path, 4).is_ok());
        assert!(matches!(
            EmbeddingStore::read_expecting(&path, 1024),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn header_layout() {
        let buf = bytes(&sample());
        assert_eq!(&buf[..8], b"LEXEMB01");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 3);
        assert_eq!(u16::from_le_bytes(buf[20..22].try_into().unwrap()), 3);
        assert_eq!(&buf[22..25], b"a:0");
        assert_eq!(buf.len(), 20 + 3 * (2 + 3 + 16));
    }

    #[test]
    fn wrong_magic() {
        let mut buf = bytes(&sample());
        buf[0] = b'X';
        assert!(matches!(EmbeddingStore::read_from(&buf[..]), Err(Error::Format(m)) if m.contains("magic")));
        let mut buf = bytes(&sample());
        buf[7] = b'9';
        assert!(matches!(EmbeddingStore::read_from(&buf[..]), Err(Error::Format(m)) if m.contains("version")));
    }

    #[test]
    fn truncated_rows() {
        let mut store = EmbeddingStore::new(2);
        for i in 0..10 {
            store.insert(format!("d:{i}"), vec![i as f32, 0.5]).unwrap();
        }
        let buf = bytes(&store);
        // drop the final row entirely: header still says 10
        let row = 2 + 3 + 8;
        let cut = &buf[..buf.len() - row];
        assert!(matches!(EmbeddingStore::read_from(cut), Err(Error::Format(m)) if m.contains("truncated")));
        let cut = &buf[..buf.len() - 1];
        assert!(matches!(EmbeddingStore::read_from(cut), Err(Error::Format(m)) if m.contains("truncated")));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut s = EmbeddingStore::new(2);
        assert!(s.insert("x", vec![1.0]).is_err());
        assert!(s.insert("x", vec![f32::NAN, 1.0]).is_err());
        s.insert("x", vec![1.0, 1.0]).unwrap();
        assert!(s.insert("x", vec![1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn random_stores_roundtrip(
            dim in 1usize..6,
            rows in prop::collection::btree_map("[a-z0-9:]{1,12}", prop::collection::vec(-1e6f32..1e6, 6), 0..12),
        ) {
            let mut store = EmbeddingStore::new(dim);
            for (k, v) in rows {
                store.insert(k, v[..dim].to_vec()).unwrap();
            }
            let buf = bytes(&store);
            let back = EmbeddingStore::read_from(&buf[..]).unwrap();
            prop_assert_eq!(back.len(), store.len());
            for ((ka, va), (kb, vb)) in store.iter().zip(back.iter()) {
                prop_assert_eq!(ka, kb);
                let ba: Vec<u32> = va.iter().map(|x| x.to_bits()).collect();
                let bb: Vec<u32> = vb.iter().map(|x| x.to_bits()).collect();
                prop_assert_eq!(ba, bb);
            }
        }
    }
}
