//! Differential testing only needs predictions. Here the ensemble members
//! are wrapped so the search sees nothing but `predict_batch`, and the
//! number of queries is counted.
//!
//! ```text
//! cargo run --release --example blackbox_ensemble -- [data_dir]
//! ```

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use hdcdiff::dataset::{data_dir, load_mnist};
use hdcdiff::difftest::run_difftest;
use hdcdiff::{BlackboxClassifier, EncoderConfig, HdcClassifier, Image, PerturbationSpec, SplitConfig};

struct Counted {
    inner: HdcClassifier,
    queries: AtomicUsize,
}

impl BlackboxClassifier for Counted {
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn predict(&self, image: &Image) -> hdcdiff::Result<u8> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.predict(image)
    }

    fn predict_batch(&self, images: &[Image]) -> hdcdiff::Result<Vec<u8>> {
        self.queries.fetch_add(images.len(), Ordering::Relaxed);
        self.inner.predict_batch(images)
    }
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let (train_file, _) = load_mnist(&dir)?;
    let (train, validation) = train_file.split(&SplitConfig::new(0.5, None)?)?;

    let ensemble: Vec<Counted> = [30, 40, 50]
        .into_iter()
        .map(|seed| -> hdcdiff::Result<Counted> {
            let mut inner = HdcClassifier::new(EncoderConfig::mnist(4_000, seed)?)?;
            inner.train_labeled(&train.images[..10_000])?;
            Ok(Counted { inner, queries: AtomicUsize::new(0) })
        })
        .collect::<Result<_, _>>()?;

    let probes = &validation.images[..2_000];
    let (report, agreed) = run_difftest(&ensemble, probes, &PerturbationSpec::default_set(1), 1)?;
    println!(
        "{} probes: {} agreed, {} disagreed, {} generated",
        probes.len(),
        agreed.len(),
        report.discrepancy_count - report.generated_count,
        report.generated_count
    );
    for c in &ensemble {
        println!("seed {}: {} predictions requested", c.seed(), c.queries.load(Ordering::Relaxed));
    }
    Ok(())
}
