//! Trains three classifiers and searches the validation split for inputs
//! they disagree on, with and without perturbation.
//!
//! ```text
//! cargo run --release --example find_discrepancies -- [data_dir] [dimension]
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use hdcdiff::dataset::data_dir;
use hdcdiff::experiment::{Experiment, ExperimentConfig};
use hdcdiff::Provenance;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let dimension: usize = args.next().map(|d| d.parse()).transpose()?.unwrap_or(10_000);

    let exp = Experiment::load(ExperimentConfig {
        data_dir: dir,
        dimension,
        ..ExperimentConfig::default()
    })?;
    let ensemble = exp.train_ensemble()?;

    for perturbation in [false, true] {
        let run = exp.difftest(&ensemble, perturbation)?;
        println!(
            "perturbation {perturbation}: {} of {} validation images disagreed on, {} generated, {:.1}s",
            run.original_count(),
            exp.validation.len(),
            run.report.generated_count,
            run.report.elapsed.as_secs_f64()
        );
        let mut by_kind: BTreeMap<String, usize> = BTreeMap::new();
        for r in &run.report.records {
            if let Provenance::Perturbed { kind, .. } = &r.provenance {
                *by_kind.entry(kind.to_string()).or_default() += 1;
            }
        }
        for (kind, n) in &by_kind {
            println!("  {kind}: {n}");
        }
        for r in run.report.records.iter().filter(|r| r.is_generated()).take(3) {
            println!("  e.g. {} true {:?} predicted {:?}", r.image_id, r.true_label, r.labels().collect::<Vec<_>>());
        }
    }
    Ok(())
}
