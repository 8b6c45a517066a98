#![allow(dead_code)]

use hdcdiff::image::MNIST_SIDE;
use hdcdiff::rng::seeded_rng;
use hdcdiff::{Image, ImageId};
use rand::Rng;

pub fn random_image(source: &str, index: u32, seed: u64) -> Image {
    let mut rng = seeded_rng(seed);
    let pixels = (0..MNIST_SIDE * MNIST_SIDE)
        .map(|_| if rng.random_bool(0.3) { rng.random() } else { 0 })
        .collect();
    Image::mnist(ImageId::new(source, index), pixels, Some(rng.random_range(0..10))).unwrap()
}

/// Bar-shaped "digits": class `c` lights up rows around `2 * c + 4`, with
/// per-image jitter and a few stray pixels.
pub fn toy_digit(source: &str, index: u32, class: u8, seed: u64) -> Image {
    let mut rng = seeded_rng(seed);
    let mut pixels = vec![0u8; MNIST_SIDE * MNIST_SIDE];
    let centre = 2 * i64::from(class) + 4 + rng.random_range(-1..=1);
    let left = rng.random_range(3..8);
    let right = rng.random_range(20..25);
    for row in (centre - 1)..=(centre + 1) {
        for col in left..right {
            pixels[row as usize * MNIST_SIDE + col] = rng.random_range(150..=255);
        }
    }
    for _ in 0..20 {
        let i = rng.random_range(0..pixels.len());
        pixels[i] = rng.random();
    }
    Image::mnist(ImageId::new(source, index), pixels, Some(class)).unwrap()
}

pub fn toy_set(source: &str, count: u32, seed: u64) -> Vec<Image> {
    (0..count)
        .map(|i| toy_digit(source, i, (i % 10) as u8, seed.wrapping_mul(1_000_003) + u64::from(i)))
        .collect()
}

pub fn idx_images(images: &[Image]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(MNIST_SIDE as u32).to_be_bytes());
    out.extend_from_slice(&(MNIST_SIDE as u32).to_be_bytes());
    for image in images {
        out.extend_from_slice(image.pixels());
    }
    out
}

pub fn idx_labels(images: &[Image]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend(images.iter().map(|x| x.label.unwrap()));
    out
}

/// Writes a tiny MNIST-shaped data directory.
pub fn write_toy_mnist(dir: &std::path::Path, train: u32, test: u32) {
    let train_set = toy_set("train", train, 1);
    let test_set = toy_set("test", test, 2);
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("train-images-idx3-ubyte"), idx_images(&train_set)).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), idx_labels(&train_set)).unwrap();
    std::fs::write(dir.join("t10k-images-idx3-ubyte"), idx_images(&test_set)).unwrap();
    std::fs::write(dir.join("t10k-labels-idx1-ubyte"), idx_labels(&test_set)).unwrap();
}
