//! Counts ensemble disagreements on perturbed test images before and after
//! dynamic retraining, optionally with the wider refresh scope.
//!
//! ```text
//! cargo run --release --example robustness -- [data_dir] [epochs] [dis|validation]
//! ```

use std::path::PathBuf;

use hdcdiff::dataset::data_dir;
use hdcdiff::experiment::{run_name, Experiment, ExperimentConfig};
use hdcdiff::retrain::RefreshScope;
use hdcdiff::RetrainMode;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let epochs: usize = args.next().map(|e| e.parse()).transpose()?.unwrap_or(40);
    let refresh_scope: RefreshScope = args.next().as_deref().unwrap_or("dis").parse()?;

    let exp = Experiment::load(ExperimentConfig {
        data_dir: dir,
        epochs,
        refresh_scope,
        ..ExperimentConfig::default()
    })?;
    let baseline = exp.train_ensemble()?;
    let bench = exp.test_bench(&baseline)?;
    let mut sets = Vec::new();
    for perturbation in [true, false] {
        let run = exp.difftest(&baseline, perturbation)?;
        let mut models = baseline.clone();
        exp.retrain(&mut models, &run, RetrainMode::Dynamic, &bench, |_| {})?;
        sets.push((run_name(RetrainMode::Dynamic, perturbation), models));
    }

    let agreed = exp.agreed_test_images(&baseline)?;
    let report = exp.robustness(&agreed, &baseline, &sets)?;
    println!("{} test images agreed on by the baseline", report.agreed_test_count);
    println!("baseline: {}", report.baseline);
    for e in &report.sets {
        println!("{}: {} ({:.3} of baseline)", e.name, e.discrepancy_count, e.ratio_to_baseline);
    }
    Ok(())
}
