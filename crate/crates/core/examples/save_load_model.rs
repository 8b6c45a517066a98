//! Trains a small model, writes it as an HDXM file and checks the reloaded
//! copy predicts identically.
//!
//! ```text
//! cargo run --release --example save_load_model -- [data_dir] [model_path]
//! ```

use std::path::PathBuf;

use hdcdiff::dataset::{data_dir, load_mnist};
use hdcdiff::{EncoderConfig, HdcClassifier};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| "runs/model_seed_30.hdxm".into());

    let (train, test) = load_mnist(&dir)?;
    let mut clf = HdcClassifier::new(EncoderConfig::mnist(2_000, 30)?)?;
    clf.train_labeled(&train.images[..5_000])?;
    clf.save(&path)?;
    let size = std::fs::metadata(&path)?.len();

    // The item memory is regenerated from the stored seed.
    let loaded = HdcClassifier::load(&path)?;
    let sample = &test.images[..1_000];
    let same = clf.predict_batch(sample)? == loaded.predict_batch(sample)?;
    println!("{} ({size} bytes), seed {}, dimension {}", path.display(), loaded.seed(), loaded.dimension());
    println!("accuracy on 1000 test images: {:.4}", loaded.evaluate_labeled(sample)?);
    println!("identical predictions after reload: {same}");
    Ok(())
}
