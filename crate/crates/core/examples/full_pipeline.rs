//! Baseline training, difference-inducing search, static and dynamic
//! retraining with and without perturbation, then a robustness comparison.
//! Every run writes its files under the output directory.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [data_dir] [out_dir] [epochs]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use hdcdiff::dataset::data_dir;
use hdcdiff::experiment::{run_name, Experiment, ExperimentConfig};
use hdcdiff::report::{metrics_csv, write_atomic, write_json};
use hdcdiff::RetrainMode;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let data = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "runs/full".into());
    let epochs: usize = args.next().map(|e| e.parse()).transpose()?.unwrap_or(40);

    let config = ExperimentConfig {
        data_dir: data,
        output_dir: out.clone(),
        epochs,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let exp = Experiment::load(config)?;
    let baseline = exp.train_ensemble()?;
    for acc in exp.test_accuracies(&baseline)? {
        println!("seed {}: baseline accuracy {:.4}", acc.seed, acc.accuracy);
    }
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());

    let bench = exp.test_bench(&baseline)?;
    let mut sets = Vec::new();
    for perturbation in [false, true] {
        let run = exp.difftest(&baseline, perturbation)?;
        println!(
            "perturbation={perturbation}: {} records ({} original, {} generated) in {:.1}s",
            run.report.discrepancy_count,
            run.original_count(),
            run.report.generated_count,
            run.report.elapsed.as_secs_f64()
        );
        for mode in [RetrainMode::Static, RetrainMode::Dynamic] {
            let name = run_name(mode, perturbation);
            let mut ensemble = baseline.clone();
            let outcome = exp.retrain(&mut ensemble, &run, mode, &bench, |_| {})?;
            let dir = out.join("retrain").join(&name);
            write_atomic(
                &dir.join("metrics.csv"),
                metrics_csv(&exp.config.seeds, outcome.rows()).as_bytes(),
            )?;
            let first = &outcome.initial;
            let last = outcome.last();
            println!(
                "{name}: mean acc {:.4} -> {:.4} (peak {:.4}), records {} -> {}, test dis {} -> {}",
                first.mean_accuracy(),
                last.mean_accuracy(),
                outcome.peak_mean_accuracy(),
                first.discrepancy_count,
                last.discrepancy_count,
                first.test_discrepancy_count,
                last.test_discrepancy_count
            );
            sets.push((name, ensemble));
        }
    }

    let agreed = exp.agreed_test_images(&baseline)?;
    let report = exp.robustness(&agreed, &baseline, &sets)?;
    println!("robustness on {} agreed test images: baseline {}", report.agreed_test_count, report.baseline);
    for entry in &report.sets {
        println!("  {}: {} (ratio {:.3})", entry.name, entry.discrepancy_count, entry.ratio_to_baseline);
    }
    write_json(&out.join("robustness.json"), &report)?;
    println!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
