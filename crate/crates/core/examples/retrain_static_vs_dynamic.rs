//! Retrains the same baseline statically and dynamically and prints the
//! per-epoch metrics side by side.
//!
//! ```text
//! cargo run --release --example retrain_static_vs_dynamic -- [data_dir] [epochs] [on|off]
//! ```

use std::path::PathBuf;

use hdcdiff::dataset::data_dir;
use hdcdiff::experiment::{Experiment, ExperimentConfig};
use hdcdiff::{EpochMetrics, RetrainMode};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let epochs: usize = args.next().map(|e| e.parse()).transpose()?.unwrap_or(20);
    let perturbation = args.next().as_deref() != Some("off");

    let exp = Experiment::load(ExperimentConfig {
        data_dir: dir,
        epochs,
        perturbation,
        ..ExperimentConfig::default()
    })?;
    let baseline = exp.train_ensemble()?;
    let run = exp.difftest(&baseline, perturbation)?;
    let bench = exp.test_bench(&baseline)?;

    let mut rows: Vec<Vec<EpochMetrics>> = Vec::new();
    for mode in [RetrainMode::Static, RetrainMode::Dynamic] {
        let mut models = baseline.clone();
        let outcome = exp.retrain(&mut models, &run, mode, &bench, |_| {})?;
        rows.push(outcome.rows().cloned().collect());
    }
    println!("epoch | static acc  records  test-dis | dynamic acc  records  test-dis");
    for (s, d) in rows[0].iter().zip(&rows[1]) {
        println!(
            "{:>5} | {:>10.4} {:>8} {:>9} | {:>11.4} {:>8} {:>9}",
            s.epoch,
            s.mean_accuracy(),
            s.discrepancy_count,
            s.test_discrepancy_count,
            d.mean_accuracy(),
            d.discrepancy_count,
            d.test_discrepancy_count
        );
    }
    Ok(())
}
