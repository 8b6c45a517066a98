//! Writes each perturbation of a few MNIST test images as PGM files.
//!
//! ```text
//! cargo run --release --example perturbation_gallery -- [data_dir] [out_dir] [count]
//! ```

use std::path::PathBuf;

use hdcdiff::dataset::{data_dir, load_mnist_part};
use hdcdiff::difftest::perturbation_seed;
use hdcdiff::report::{pgm_bytes, write_atomic};
use hdcdiff::PerturbationSpec;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| data_dir("data/mnist".as_ref()));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "runs/gallery".into());
    let count: usize = args.next().map(|c| c.parse()).transpose()?.unwrap_or(5);

    let test = load_mnist_part(&dir, "t10k", "test")?;
    let specs = PerturbationSpec::default_set(1);
    for image in test.images.iter().take(count) {
        write_atomic(&out.join(format!("{}.pgm", image.id)), &pgm_bytes(image))?;
        for spec in &specs {
            let y = spec.with_seed(perturbation_seed(spec, &image.id)).apply(image)?;
            let changed = y.pixels().iter().zip(image.pixels()).filter(|(a, b)| a != b).count();
            write_atomic(&out.join(format!("{}.pgm", y.id)), &pgm_bytes(&y))?;
            println!("{:<24} label {:?}  {changed:>3} pixels changed", y.id.to_string(), y.label);
        }
    }
    println!("wrote {} files to {}", count * (specs.len() + 1), out.display());
    Ok(())
}
