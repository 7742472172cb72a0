//! Trains the sentence labeler on one synthetic context, saves a checkpoint
//! and scores the held-out documents.
//!
//! cargo run --release --example train_separable

use lexseg::embed::HashingEmbedder;
use lexseg::metrics::{micro_f1, prf_per_class};
use lexseg::neural::{load_checkpoint, save_checkpoint, ModelConfig};
use lexseg::synthetic::{generate, SyntheticSpec};
use lexseg::trainer::{predict, train, TrainSchedule};

fn main() -> lexseg::Result<()> {
    let docs = generate(&SyntheticSpec {
        contexts: vec!["alpha".into()],
        docs_per_context: 80,
        ..SyntheticSpec::default()
    });
    let (train_docs, rest) = docs.split_at(60);
    let (val_docs, test_docs) = rest.split_at(10);
    let provider = HashingEmbedder::new(64, 0);
    let config = ModelConfig {
        input_dim: 64,
        hidden_units: 16,
        batch_size: 8,
        ..ModelConfig::default()
    };
    let schedule = TrainSchedule {
        max_epochs: 80,
        initial_lr: 0.01,
        reduced_lr: 0.001,
        lr_patience: 10,
        stop_patience: 20,
    };
    let result = train(train_docs, val_docs, &provider, &config, &schedule, 1)?;
    for r in result.history.iter().step_by(5) {
        println!(
            "epoch {:>3}  train {:.4}  val {:.4}  acc {:.3}  lr {}",
            r.epoch, r.train_loss, r.val_loss, r.val_acc, r.lr
        );
    }
    println!("best epoch {} of {}", result.best_epoch, result.history.len());

    let path = std::env::temp_dir().join("lexseg-example.ckpt");
    save_checkpoint(&path, &config, &result.params)?;
    let (config, params) = load_checkpoint(&path)?;
    std::fs::remove_file(&path)?;

    let (mut gold, mut predicted) = (Vec::new(), Vec::new());
    for doc in test_docs {
        gold.extend(doc.labels());
        predicted.extend(predict(&params, doc, &provider, &config)?);
    }
    let f1 = prf_per_class(&gold, &predicted)?.f1s();
    println!(
        "test micro F1 {:.3}  (Background {:.3}, Analysis {:.3}, Outcome {:.3})",
        micro_f1(&gold, &predicted)?,
        f1[0],
        f1[1],
        f1[2]
    );
    Ok(())
}
