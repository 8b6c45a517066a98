//! Hypervector algebra and image encoding on a synthetic digit. Needs no data.
//!
//! ```text
//! cargo run --release --example encode_image
//! ```

use hdcdiff::{bind, bundle, cosine_similarity, encode_image, EncoderConfig, Image, ImageId, ItemMemory};

fn bar(index: u32, col: usize, shift: usize) -> Image {
    let mut pixels = vec![0u8; 784];
    for row in 4..24 {
        pixels[row * 28 + col + shift] = 255;
        pixels[row * 28 + col + shift + 1] = 180;
    }
    Image::mnist(ImageId::new("synthetic", index), pixels, Some(1)).unwrap()
}

fn main() -> hdcdiff::Result<()> {
    let mem = ItemMemory::generate(EncoderConfig::mnist(10_000, 30)?)?;

    let p = mem.position_hv(100)?;
    let v = mem.value_hv(200)?;
    let pv = bind(&p, &v)?;
    println!("CoSim(P, V) = {:+.4}  (unrelated item vectors)", cosine_similarity(&p, &v)?);
    println!("bind(bind(P, V), V) == P: {}", bind(&pv, &v)? == p);
    let b = bundle([&p, &v])?;
    println!("bundle keeps both: CoSim(P+V, P) = {:.3}, CoSim(P+V, V) = {:.3}", cosine_similarity(&b, &p)?, cosine_similarity(&b, &v)?);

    // Same stroke, shifted by one and by eight columns. The shared black
    // background keeps even the distant pair similar.
    let a = encode_image(&mem, &bar(0, 12, 0))?;
    let near = encode_image(&mem, &bar(1, 12, 1))?;
    let far = encode_image(&mem, &bar(2, 12, 8))?;
    println!("shift by 1 column: CoSim = {:.4}", cosine_similarity(&a, &near)?);
    println!("shift by 8 columns: CoSim = {:.4}", cosine_similarity(&a, &far)?);

    // A different seed gives unrelated item vectors.
    let other = ItemMemory::generate(EncoderConfig::mnist(10_000, 40)?)?;
    println!("seed 30 vs seed 40 item memories: first row agrees on {:.1}% of components",
        100.0 * mem.position(0).iter().zip(other.position(0)).filter(|(x, y)| x == y).count() as f64 / 10_000.0);
    println!("dimension {}, encoded components range {}..={}", a.dimension(),
        a.components().iter().min().unwrap(), a.components().iter().max().unwrap());
    Ok(())
}
