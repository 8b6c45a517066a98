//! Trains one classifier per seed on half of the MNIST training file and
//! reports test accuracy.
//!
//! ```text
//! cargo run --release --example train_baseline -- [data_dir] [dimension]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use hdcdiff::dataset::{data_dir, load_mnist};
use hdcdiff::{EncoderConfig, HdcClassifier, SplitConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let dimension: usize = args.next().map(|d| d.parse()).transpose()?.unwrap_or(10_000);

    let (train_file, test) = load_mnist(&dir)?;
    let (train, _validation) = train_file.split(&SplitConfig::new(0.5, None)?)?;
    println!("training on {} images, testing on {}", train.len(), test.len());

    for seed in [30, 40, 50] {
        let start = Instant::now();
        let mut clf = HdcClassifier::new(EncoderConfig::mnist(dimension, seed)?)?;
        clf.train_labeled(&train.images)?;
        let trained = start.elapsed();
        let acc = clf.evaluate_labeled(&test.images)?;
        println!(
            "seed {seed}: accuracy {:.2}%  (train {:.1}s, total {:.1}s)",
            100.0 * acc,
            trained.as_secs_f64(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
