//! Versioned binary checkpoints.
//!
//! ```text
//! magic        8 bytes  "LEXCKPT1"
//! input_dim    u32
//! hidden       u32
//! classes      u32
//! max_len      u32
//! batch_size   u32
//! dropout      f64
//! count        u64      number of parameter values
//! values       count × f64, in ModelParams::tensors() order
//! ```
//! All values little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ModelParams;
use super::ModelConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LEXCKPT1";

pub fn write_checkpoint<W: Write>(mut out: W, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    for v in [
        config.input_dim,
        config.hidden_units,
        config.num_classes,
        config.max_len,
        config.batch_size,
    ] {
        out.write_all(&(v as u32).to_le_bytes())?;
    }
    out.write_all(&config.input_dropout_rate.to_le_bytes())?;
    out.write_all(&(params.len() as u64).to_le_bytes())?;
    for t in params.tensors() {
        for x in t {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<(ModelConfig, ModelParams)> {
    let truncated = |_| Error::Format("truncated checkpoint".into());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(truncated)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let mut word = [0u8; 4];
    let mut dims = [0usize; 5];
    for d in &mut dims {
        input.read_exact(&mut word).map_err(truncated)?;
        *d = u32::from_le_bytes(word) as usize;
    }
    let mut long = [0u8; 8];
    input.read_exact(&mut long).map_err(truncated)?;
    let dropout = f64::from_le_bytes(long);
    let config = ModelConfig {
        input_dim: dims[0],
        hidden_units: dims[1],
        num_classes: dims[2],
        max_len: dims[3],
        batch_size: dims[4],
        input_dropout_rate: dropout,
        pad_to_max_len: false,
    };
    config.validate()?;
    input.read_exact(&mut long).map_err(truncated)?;
    let count = u64::from_le_bytes(long) as usize;
    let mut params = ModelParams::zeros(&config);
    if count != params.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {count} values, config implies {}",
            params.len()
        )));
    }
    for t in params.tensors_mut() {
        for x in t.iter_mut() {
            input.read_exact(&mut long).map_err(truncated)?;
            *x = f64::from_le_bytes(long);
        }
    }
    Ok((config, params))
}

pub fn save_checkpoint(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    write_checkpoint(BufWriter::new(File::create(path)?), config, params)
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;

    #[test]
    fn roundtrip_is_bitwise() {
        let config = ModelConfig { input_dim: 5, hidden_units: 2, ..ModelConfig::default() };
        let params = init_params(&config, 8);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &config, &params).unwrap();
        assert_eq!(buf.len(), 8 + 20 + 8 + 8 + 8 * params.len());
        let (c, p) = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(c, config);
        assert_eq!(p, params);
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = 0;
        assert!(read_checkpoint(&bad[..]).is_err());
    }
}
