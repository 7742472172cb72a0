//! Runs the in-context, pooled and random settings on a synthetic
//! three-context corpus and prints the resulting table.
//!
//! cargo run --release --example cross_context_experiment

use std::time::Instant;

use lexseg::embed::HashingEmbedder;
use lexseg::experiments::{assign_folds, run_experiment, ExperimentMode, RunOptions, RunReport};
use lexseg::neural::ModelConfig;
use lexseg::synthetic::{generate, SyntheticSpec};
use lexseg::trainer::TrainSchedule;

fn main() -> lexseg::Result<()> {
    let docs = generate(&SyntheticSpec::default());
    let plan = assign_folds(&docs, 11)?;
    let provider = HashingEmbedder::new(64, 3);
    let config = ModelConfig {
        input_dim: 64,
        hidden_units: 12,
        batch_size: 8,
        ..ModelConfig::default()
    };
    let schedule = TrainSchedule {
        max_epochs: 60,
        initial_lr: 0.01,
        reduced_lr: 0.001,
        lr_patience: 10,
        stop_patience: 15,
    };
    let options = RunOptions {
        run_seed: 5,
        ..RunOptions::default()
    };

    let mut folds = Vec::new();
    for mode in [
        ExperimentMode::Random,
        ExperimentMode::InContext,
        ExperimentMode::H1,
        ExperimentMode::H2,
        ExperimentMode::H3,
    ] {
        let start = Instant::now();
        let report = run_experiment(&docs, &provider, &plan, mode, &[], &config, &schedule, &options)?;
        eprintln!("{mode:?}: {:.1}s", start.elapsed().as_secs_f64());
        folds.extend(report.folds);
    }
    let report = RunReport::from_folds(folds)?;
    print!("{}", report.to_text_table());
    Ok(())
}
