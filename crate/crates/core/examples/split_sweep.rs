//! Runs the default pipeline for several training/validation splits and
//! reports the first and last test-set discrepancy counts.
//!
//! ```text
//! cargo run --release --example split_sweep -- [data_dir] [epochs] [fractions, e.g. 0.3,0.5,0.6]
//! ```

use std::path::PathBuf;

use hdcdiff::dataset::data_dir;
use hdcdiff::experiment::{run_pipeline, Experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let epochs: usize = args.next().map(|e| e.parse()).transpose()?.unwrap_or(10);
    let fractions: Vec<f64> = args
        .next()
        .unwrap_or_else(|| "0.3,0.5,0.6".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;

    let base = Experiment::load(ExperimentConfig {
        data_dir: dir,
        epochs,
        ..ExperimentConfig::default()
    })?;
    println!("fraction  train  validation  test-dis first -> last  mean acc first -> last");
    for f in fractions {
        let exp = base.with_config(ExperimentConfig {
            validation_fraction: f,
            output_dir: format!("runs/split_sweep/fraction_{f}").into(),
            ..base.config.clone()
        })?;
        let outcome = run_pipeline(&exp)?;
        let (a, b) = (&outcome.initial, outcome.last());
        println!(
            "{f:>8}  {:>5}  {:>10}  {:>8} -> {:<6}  {:.4} -> {:.4}",
            exp.train.len(),
            exp.validation.len(),
            a.test_discrepancy_count,
            b.test_discrepancy_count,
            a.mean_accuracy(),
            b.mean_accuracy()
        );
    }
    Ok(())
}
