use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::params::{GruDirection, Matrix, ModelParams};
use super::ModelConfig;
use crate::error::{Error, Result};

/// A padded batch of sequences, row-major `batch × steps × input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub batch: usize,
    pub steps: usize,
    pub input_dim: usize,
    pub inputs: Vec<f64>,
    /// `batch × steps` class indices; padded entries are ignored.
    pub labels: Vec<usize>,
    /// `batch × steps`, true for real positions. Always a true-prefix.
    pub mask: Vec<bool>,
}

impl Batch {
    pub fn new(
        batch: usize,
        steps: usize,
        input_dim: usize,
        inputs: Vec<f64>,
        labels: Vec<usize>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if inputs.len() != batch * steps * input_dim
            || labels.len() != batch * steps
            || mask.len() != batch * steps
        {
            return Err(Error::Shape(format!(
                "batch {batch}×{steps}×{input_dim} got {} inputs, {} labels, {} mask entries",
                inputs.len(),
                labels.len(),
                mask.len()
            )));
        }
        for (b, row) in mask.chunks(steps.max(1)).enumerate() {
            let len = row.iter().take_while(|&&m| m).count();
            if row[len..].iter().any(|&m| m) {
                return Err(Error::Shape(format!(
                    "mask of sequence {b} is not a prefix; padding must trail"
                )));
            }
        }
        Ok(Batch {
            batch,
            steps,
            input_dim,
            inputs,
            labels,
            mask,
        })
    }

    /// Pads `sequences` of `(row-major len × input_dim inputs, labels)` to a
    /// common length: the longest sequence, or `pad_to` if given.
    pub fn from_sequences(
        sequences: &[(&[f64], &[usize])],
        input_dim: usize,
        pad_to: Option<usize>,
    ) -> Result<Self> {
        let longest = sequences.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
        let steps = pad_to.unwrap_or(longest);
        if longest > steps {
            return Err(Error::Shape(format!(
                "sequence of length {longest} exceeds padded length {steps}"
            )));
        }
        let batch = sequences.len();
        let mut inputs = vec![0.0; batch * steps * input_dim];
        let mut labels = vec![0; batch * steps];
        let mut mask = vec![false; batch * steps];
        for (b, (x, y)) in sequences.iter().enumerate() {
            if x.len() != y.len() * input_dim {
                return Err(Error::Shape(format!(
                    "sequence {b}: {} input values for {} labels of width {input_dim}",
                    x.len(),
                    y.len()
                )));
            }
            let base = b * steps;
            inputs[base * input_dim..base * input_dim + x.len()].copy_from_slice(x);
            labels[base..base + y.len()].copy_from_slice(y);
            mask[base..base + y.len()].fill(true);
        }
        Batch::new(batch, steps, input_dim, inputs, labels, mask)
    }

    pub fn len_of(&self, b: usize) -> usize {
        self.mask[b * self.steps..(b + 1) * self.steps]
            .iter()
            .take_while(|&&m| m)
            .count()
    }

    pub fn unmasked(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn sequence_inputs(&self, b: usize, len: usize) -> &[f64] {
        let start = b * self.steps * self.input_dim;
        &self.inputs[start..start + len * self.input_dim]
    }

    fn sequence_labels(&self, b: usize, len: usize) -> &[usize] {
        &self.labels[b * self.steps..b * self.steps + len]
    }
}

/// Activations of one direction, indexed by original time order.
#[derive(Debug, Clone)]
struct DirectionCache {
    h: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    candidate: Vec<f64>,
    /// `h_prev · U_h`, before the reset gate is applied.
    recurrent_h: Vec<f64>,
}

#[derive(Debug, Clone)]
struct SequenceCache {
    len: usize,
    /// Inputs after dropout.
    x: Vec<f64>,
    forward: DirectionCache,
    backward: DirectionCache,
    probs: Vec<f64>,
}

/// Everything `backward` needs from the matching `forward` call.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    sequences: Vec<SequenceCache>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn run_direction(dir: &GruDirection, x: &[f64], len: usize, input_dim: usize, reverse: bool) -> DirectionCache {
    let h_dim = dir.hidden();
    let mut cache = DirectionCache {
        h: vec![0.0; len * h_dim],
        z: vec![0.0; len * h_dim],
        r: vec![0.0; len * h_dim],
        candidate: vec![0.0; len * h_dim],
        recurrent_h: vec![0.0; len * h_dim],
    };
    let zero = vec![0.0; h_dim];
    let mut prev = zero.clone();
    let mut a_z = vec![0.0; h_dim];
    let mut a_r = vec![0.0; h_dim];
    let mut a_h = vec![0.0; h_dim];
    let mut uh = vec![0.0; h_dim];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    };
    for t in order {
        let xt = &x[t * input_dim..(t + 1) * input_dim];
        a_z.copy_from_slice(&dir.b_z);
        a_r.copy_from_slice(&dir.b_r);
        a_h.copy_from_slice(&dir.b_h);
        uh.fill(0.0);
        dir.w_z.accumulate_vec_mul(xt, &mut a_z);
        dir.w_r.accumulate_vec_mul(xt, &mut a_r);
        dir.w_h.accumulate_vec_mul(xt, &mut a_h);
        dir.u_z.accumulate_vec_mul(&prev, &mut a_z);
        dir.u_r.accumulate_vec_mul(&prev, &mut a_r);
        dir.u_h.accumulate_vec_mul(&prev, &mut uh);
        let o = t * h_dim;
        for j in 0..h_dim {
            let z = sigmoid(a_z[j]);
            let r = sigmoid(a_r[j]);
            let cand = (a_h[j] + r * uh[j]).tanh();
            let h = (1.0 - z) * prev[j] + z * cand;
            cache.z[o + j] = z;
            cache.r[o + j] = r;
            cache.candidate[o + j] = cand;
            cache.recurrent_h[o + j] = uh[j];
            cache.h[o + j] = h;
        }
        prev.copy_from_slice(&cache.h[o..o + h_dim]);
    }
    cache
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

fn apply_dropout(x: &mut [f64], rate: f64, seed: u64, stream: u64) {
    if rate <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let keep = 1.0 - rate;
    for v in x.iter_mut() {
        if rng.gen::<f64>() < keep {
            *v /= keep;
        } else {
            *v = 0.0;
        }
    }
}

fn check_shapes(params: &ModelParams, batch: &Batch, config: &ModelConfig) -> Result<()> {
    if params.input_dim() != batch.input_dim
        || params.input_dim() != config.input_dim
        || params.hidden() != config.hidden_units
        || params.num_classes() != config.num_classes
    {
        return Err(Error::Shape(format!(
            "params ({}→{}→{}) do not match batch input {} and config ({}→{}→{})",
            params.input_dim(),
            params.hidden(),
            params.num_classes(),
            batch.input_dim,
            config.input_dim,
            config.hidden_units,
            config.num_classes
        )));
    }
    if batch.steps > config.max_len {
        return Err(Error::Shape(format!(
            "batch length {} exceeds max_len {}",
            batch.steps, config.max_len
        )));
    }
    if batch.labels.iter().zip(&batch.mask).any(|(&l, &m)| m && l >= config.num_classes) {
        return Err(Error::Shape("label index out of range".into()));
    }
    Ok(())
}

/// The dense kernel's forward-state rows and backward-state rows.
fn split_output_kernel(params: &ModelParams) -> (Matrix, Matrix) {
    let (h_dim, classes) = (params.hidden(), params.num_classes());
    let (top, bottom) = params.w_out.data.split_at(h_dim * classes);
    let part = |data: &[f64]| Matrix { rows: h_dim, cols: classes, data: data.to_vec() };
    (part(top), part(bottom))
}

/// Class probabilities `batch × steps × classes`. Padded positions get the
/// uniform distribution. `dropout_seed` switches input dropout on.
pub fn forward(
    params: &ModelParams,
    batch: &Batch,
    config: &ModelConfig,
    dropout_seed: Option<u64>,
) -> Result<(Vec<f64>, ForwardCache)> {
    check_shapes(params, batch, config)?;
    let (input_dim, h_dim, classes) = (batch.input_dim, params.hidden(), params.num_classes());
    let (w_fwd, w_bwd) = split_output_kernel(params);
    let sequences: Vec<SequenceCache> = (0..batch.batch)
        .into_par_iter()
        .map(|b| {
            let len = batch.len_of(b);
            let mut x = batch.sequence_inputs(b, len).to_vec();
            if let Some(seed) = dropout_seed {
                apply_dropout(&mut x, config.input_dropout_rate, seed, b as u64);
            }
            let fwd = run_direction(&params.forward, &x, len, input_dim, false);
            let bwd = run_direction(&params.backward, &x, len, input_dim, true);
            let mut probs = vec![0.0; len * classes];
            for t in 0..len {
                let logits = &mut probs[t * classes..(t + 1) * classes];
                logits.copy_from_slice(&params.b_out);
                w_fwd.accumulate_vec_mul(&fwd.h[t * h_dim..(t + 1) * h_dim], logits);
                w_bwd.accumulate_vec_mul(&bwd.h[t * h_dim..(t + 1) * h_dim], logits);
                softmax_in_place(logits);
            }
            SequenceCache {
                len,
                x,
                forward: fwd,
                backward: bwd,
                probs,
            }
        })
        .collect();

    let mut probs = vec![1.0 / classes as f64; batch.batch * batch.steps * classes];
    for (b, seq) in sequences.iter().enumerate() {
        let start = b * batch.steps * classes;
        probs[start..start + seq.probs.len()].copy_from_slice(&seq.probs);
    }
    Ok((probs, ForwardCache { sequences }))
}

/// Mean negative log-likelihood over unmasked positions.
pub fn masked_loss(probs: &[f64], labels: &[usize], mask: &[bool]) -> Result<f64> {
    if labels.len() != mask.len() || labels.is_empty() || !probs.len().is_multiple_of(labels.len()) {
        return Err(Error::Shape(format!(
            "{} probabilities for {} labels and {} mask entries",
            probs.len(),
            labels.len(),
            mask.len()
        )));
    }
    let classes = probs.len() / labels.len();
    let mut total = 0.0;
    let mut count = 0usize;
    for (pos, (&label, &m)) in labels.iter().zip(mask).enumerate() {
        if m {
            let p = probs[pos * classes + label];
            total -= p.max(f64::MIN_POSITIVE).ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::AllMasked);
    }
    Ok(total / count as f64)
}

/// Per-gate pre-activation gradients for one step.
struct StepGrads {
    z: Vec<f64>,
    r: Vec<f64>,
    h: Vec<f64>,
    /// Gradient flowing into `h_prev · U_h`.
    recurrent_h: Vec<f64>,
}

fn backprop_direction(
    dir: &GruDirection,
    cache: &DirectionCache,
    x: &[f64],
    input_dim: usize,
    d_out: &[f64],
    reverse: bool,
    grads: &mut GruDirection,
) {
    let h_dim = dir.hidden();
    let len = cache.h.len() / h_dim;
    let zero = vec![0.0; h_dim];
    let mut carry = vec![0.0; h_dim];
    let mut step = StepGrads {
        z: vec![0.0; h_dim],
        r: vec![0.0; h_dim],
        h: vec![0.0; h_dim],
        recurrent_h: vec![0.0; h_dim],
    };
    // visit steps in the reverse of processing order
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new(0..len)
    } else {
        Box::new((0..len).rev())
    };
    for t in order {
        let o = t * h_dim;
        let prev: &[f64] = match (reverse, t) {
            (false, 0) => &zero,
            (false, _) => &cache.h[o - h_dim..o],
            (true, _) if t + 1 == len => &zero,
            (true, _) => &cache.h[o + h_dim..o + 2 * h_dim],
        };
        let mut d_prev = vec![0.0; h_dim];
        for j in 0..h_dim {
            let dh = d_out[o + j] + carry[j];
            let z = cache.z[o + j];
            let r = cache.r[o + j];
            let cand = cache.candidate[o + j];
            let d_cand = dh * z;
            let d_z = dh * (cand - prev[j]);
            d_prev[j] = dh * (1.0 - z);
            let d_ah = d_cand * (1.0 - cand * cand);
            let d_r = d_ah * cache.recurrent_h[o + j];
            step.h[j] = d_ah;
            step.recurrent_h[j] = d_ah * r;
            step.z[j] = d_z * z * (1.0 - z);
            step.r[j] = d_r * r * (1.0 - r);
        }
        let xt = &x[t * input_dim..(t + 1) * input_dim];
        grads.w_z.accumulate_outer(xt, &step.z);
        grads.w_r.accumulate_outer(xt, &step.r);
        grads.w_h.accumulate_outer(xt, &step.h);
        grads.u_z.accumulate_outer(prev, &step.z);
        grads.u_r.accumulate_outer(prev, &step.r);
        grads.u_h.accumulate_outer(prev, &step.recurrent_h);
        for j in 0..h_dim {
            grads.b_z[j] += step.z[j];
            grads.b_r[j] += step.r[j];
            grads.b_h[j] += step.h[j];
        }
        dir.u_z.accumulate_mul_vec(&step.z, &mut d_prev);
        dir.u_r.accumulate_mul_vec(&step.r, &mut d_prev);
        dir.u_h.accumulate_mul_vec(&step.recurrent_h, &mut d_prev);
        carry = d_prev;
    }
}

/// Exact gradient of [`masked_loss`] with respect to every parameter.
pub fn backward(
    params: &ModelParams,
    batch: &Batch,
    cache: &ForwardCache,
    config: &ModelConfig,
) -> Result<ModelParams> {
    check_shapes(params, batch, config)?;
    if cache.sequences.len() != batch.batch {
        return Err(Error::Shape("cache does not belong to this batch".into()));
    }
    let total = batch.unmasked();
    if total == 0 {
        return Err(Error::AllMasked);
    }
    let scale = 1.0 / total as f64;
    let (input_dim, h_dim, classes) = (batch.input_dim, params.hidden(), params.num_classes());

    let per_sequence: Vec<ModelParams> = cache
        .sequences
        .par_iter()
        .enumerate()
        .map(|(b, seq)| {
            let mut grads = params.zeros_like();
            let labels = batch.sequence_labels(b, seq.len);
            let mut d_fwd = vec![0.0; seq.len * h_dim];
            let mut d_bwd = vec![0.0; seq.len * h_dim];
            let mut d_logits = vec![0.0; classes];
            let mut d_concat = vec![0.0; 2 * h_dim];
            let mut concat = vec![0.0; 2 * h_dim];
            for t in 0..seq.len {
                let p = &seq.probs[t * classes..(t + 1) * classes];
                for c in 0..classes {
                    d_logits[c] = scale * (p[c] - if c == labels[t] { 1.0 } else { 0.0 });
                    grads.b_out[c] += d_logits[c];
                }
                concat[..h_dim].copy_from_slice(&seq.forward.h[t * h_dim..(t + 1) * h_dim]);
                concat[h_dim..].copy_from_slice(&seq.backward.h[t * h_dim..(t + 1) * h_dim]);
                grads.w_out.accumulate_outer(&concat, &d_logits);
                d_concat.fill(0.0);
                params.w_out.accumulate_mul_vec(&d_logits, &mut d_concat);
                d_fwd[t * h_dim..(t + 1) * h_dim].copy_from_slice(&d_concat[..h_dim]);
                d_bwd[t * h_dim..(t + 1) * h_dim].copy_from_slice(&d_concat[h_dim..]);
            }
            backprop_direction(&params.forward, &seq.forward, &seq.x, input_dim, &d_fwd, false, &mut grads.forward);
            backprop_direction(&params.backward, &seq.backward, &seq.x, input_dim, &d_bwd, true, &mut grads.backward);
            grads
        })
        .collect();

    let mut grads = params.zeros_like();
    for g in &per_sequence {
        grads.add_assign(g);
    }
    Ok(grads)
}
