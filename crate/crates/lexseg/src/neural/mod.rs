//! Masked bidirectional GRU with a time-distributed softmax head.
//!
//! Everything here runs in 64-bit floating point. A document is one
//! sequence; each timestep is one sentence vector. Padding is always a
//! suffix, so masking is implemented by running each direction only over the
//! true length of its sequence.

mod adam;
mod checkpoint;
mod gru;
mod params;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gru::{backward, forward, masked_loss, Batch, ForwardCache};
pub use params::{init_params, GruDirection, Matrix, ModelParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Units per direction.
    pub hidden_units: usize,
    pub num_classes: usize,
    /// Inverted dropout on the GRU inputs during training.
    pub input_dropout_rate: f64,
    pub max_len: usize,
    /// Documents per batch.
    pub batch_size: usize,
    /// Pad every batch to `max_len` instead of its longest document.
    pub pad_to_max_len: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 1024,
            hidden_units: 256,
            num_classes: 3,
            input_dropout_rate: 0.2,
            max_len: 1080,
            batch_size: 32,
            pad_to_max_len: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_dim", self.input_dim),
            ("hidden_units", self.hidden_units),
            ("num_classes", self.num_classes),
            ("max_len", self.max_len),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.input_dropout_rate) {
            return Err(Error::Invalid(format!(
                "dropout rate {} outside [0, 1)",
                self.input_dropout_rate
            )));
        }
        Ok(())
    }
}
