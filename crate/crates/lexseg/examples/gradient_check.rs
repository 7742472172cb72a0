//! Compares backpropagated gradients with central finite differences on a
//! tiny bidirectional GRU.
//!
//! cargo run --example gradient_check

use lexseg::neural::{backward, forward, init_params, masked_loss, Batch, ModelConfig, ModelParams};

fn main() -> lexseg::Result<()> {
    let config = ModelConfig {
        input_dim: 4,
        hidden_units: 3,
        max_len: 5,
        batch_size: 2,
        ..ModelConfig::default()
    };
    let params = init_params(&config, 42);
    let xs: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let batch = Batch::from_sequences(&[(&xs[..], &[0, 1, 1, 2, 2][..]), (&xs[..12], &[0, 0, 1][..])], 4, None)?;
    let loss = |p: &ModelParams| -> lexseg::Result<f64> {
        let (probs, _) = forward(p, &batch, &config, None)?;
        masked_loss(&probs, &batch.labels, &batch.mask)
    };
    let (_, cache) = forward(&params, &batch, &config, None)?;
    let grads = backward(&params, &batch, &cache, &config)?;
    let step = 1e-5;
    for (ti, name) in ModelParams::tensor_names().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for k in 0..params.tensors()[ti].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[ti][k] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[ti][k] -= step;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * step);
            let analytic = grads.tensors()[ti][k];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4));
        }
        println!("{name:<8} worst relative error {worst:.2e}");
    }
    Ok(())
}
