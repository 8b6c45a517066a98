//! Hypervector algebra and the position/value image encoder.
//!
//! Base hypervectors are bipolar (`{-1, +1}`). Pixels are encoded by binding
//! a position hypervector with a value hypervector, and an image is the
//! bundle (element-wise integer sum) of its pixel hypervectors. Nothing is
//! ever thresholded: accumulated hypervectors stay integer-valued.
//!
//! The image encoder uses the identity
//!
//! ```text
//! sum_i P[i] * V[x_i] = sum_i P[i] * V[0]  +  sum_{i : x_i != 0} P[i] * (V[x_i] - V[0])
//! ```
//!
//! where the first term is precomputed once per item memory. MNIST digits are
//! mostly background, so this touches roughly a fifth of the pixels. The
//! result is exactly the plain bundle of bound pixel hypervectors.

use std::ops::{Add, Mul};

use rand::RngCore;

use crate::error::{check_len, HdcError, Result};
use crate::image::{Image, MNIST_SIDE};
use crate::rng::seeded_rng;

pub const DEFAULT_DIMENSION: usize = 10_000;
pub const VALUE_LEVELS: usize = 256;

/// Similarity reported when either operand has zero norm.
pub const MIN_SIMILARITY: f64 = -1.0;

/// A hypervector with signed integer components.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hypervector {
    components: Vec<i32>,
}

impl Hypervector {
    pub fn new(components: Vec<i32>) -> Self {
        Hypervector { components }
    }

    pub fn zeros(dimension: usize) -> Self {
        Hypervector::new(vec![0; dimension])
    }

    pub fn ones(dimension: usize) -> Self {
        Hypervector::new(vec![1; dimension])
    }

    /// Draws a bipolar hypervector, one random bit per component.
    pub fn random_bipolar<R: RngCore + ?Sized>(dimension: usize, rng: &mut R) -> Self {
        let mut bits = vec![0i8; dimension];
        fill_bipolar(&mut bits, rng);
        Hypervector::new(bits.into_iter().map(i32::from).collect())
    }

    pub fn from_bipolar(components: &[i8]) -> Self {
        Hypervector::new(components.iter().map(|&c| i32::from(c)).collect())
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[i32] {
        &self.components
    }

    pub fn into_components(self) -> Vec<i32> {
        self.components
    }

    pub fn is_bipolar(&self) -> bool {
        self.components.iter().all(|&c| c == 1 || c == -1)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0)
    }

    pub fn negate(&self) -> Hypervector {
        Hypervector::new(self.components.iter().map(|&c| -c).collect())
    }

    pub fn scale(&self, k: i32) -> Hypervector {
        Hypervector::new(self.components.iter().map(|&c| c * k).collect())
    }

    pub fn dot(&self, other: &Hypervector) -> Result<i64> {
        check_len(self.dimension(), other.dimension())?;
        Ok(dot(&self.components, &other.components))
    }

    pub fn norm_sq(&self) -> i64 {
        norm_sq(&self.components)
    }

    /// Component-wise difference `self - other`.
    pub fn sub(&self, other: &Hypervector) -> Result<Hypervector> {
        check_len(self.dimension(), other.dimension())?;
        Ok(Hypervector::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }
}

impl From<Vec<i32>> for Hypervector {
    fn from(components: Vec<i32>) -> Self {
        Hypervector::new(components)
    }
}

/// Element-wise product.
pub fn bind(a: &Hypervector, b: &Hypervector) -> Result<Hypervector> {
    check_len(a.dimension(), b.dimension())?;
    Ok(Hypervector::new(
        a.components
            .iter()
            .zip(&b.components)
            .map(|(x, y)| x * y)
            .collect(),
    ))
}

/// Element-wise sum of a non-empty sequence of equal-length hypervectors.
pub fn bundle<'a, I>(hvs: I) -> Result<Hypervector>
where
    I: IntoIterator<Item = &'a Hypervector>,
{
    let mut iter = hvs.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| HdcError::domain("cannot bundle an empty set of hypervectors"))?;
    let mut acc = first.components.clone();
    for hv in iter {
        check_len(acc.len(), hv.dimension())?;
        for (a, &c) in acc.iter_mut().zip(&hv.components) {
            *a += c;
        }
    }
    Ok(Hypervector::new(acc))
}

/// Cosine similarity. Returns [`MIN_SIMILARITY`] when either norm is zero.
pub fn cosine_similarity(a: &Hypervector, b: &Hypervector) -> Result<f64> {
    check_len(a.dimension(), b.dimension())?;
    Ok(cosine_from_parts(
        dot(&a.components, &b.components),
        a.norm_sq(),
        b.norm_sq(),
    ))
}

pub(crate) fn cosine_from_parts(dot: i64, norm_sq_a: i64, norm_sq_b: i64) -> f64 {
    if norm_sq_a == 0 || norm_sq_b == 0 {
        return MIN_SIMILARITY;
    }
    let cos = dot as f64 / ((norm_sq_a as f64).sqrt() * (norm_sq_b as f64).sqrt());
    cos.clamp(-1.0, 1.0)
}

/// Exact integer dot product.
pub(crate) fn dot<A, B>(a: &[A], b: &[B]) -> i64
where
    A: Copy + Into<i64>,
    B: Copy + Into<i64>,
{
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0i64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += ca[k].into() * cb[k].into();
        }
    }
    let tail: i64 = rest_a
        .iter()
        .zip(rest_b)
        .map(|(&x, &y)| x.into() * y.into())
        .sum();
    acc.iter().sum::<i64>() + tail
}

pub(crate) fn norm_sq<A: Copy + Into<i64>>(a: &[A]) -> i64 {
    dot(a, a)
}

fn fill_bipolar<R: RngCore + ?Sized>(out: &mut [i8], rng: &mut R) {
    for chunk in out.chunks_mut(64) {
        let mut bits = rng.next_u64();
        for c in chunk {
            *c = if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
        }
    }
}

/// Geometry, dimension and seed of an encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub dimension: usize,
    pub image_width: usize,
    pub image_height: usize,
    pub value_levels: usize,
    pub seed: u64,
}

impl EncoderConfig {
    /// 28×28 greyscale images, 256 value levels.
    pub fn mnist(dimension: usize, seed: u64) -> Result<Self> {
        EncoderConfig::new(dimension, MNIST_SIDE, MNIST_SIDE, seed)
    }

    pub fn new(dimension: usize, image_width: usize, image_height: usize, seed: u64) -> Result<Self> {
        let config = EncoderConfig {
            dimension,
            image_width,
            image_height,
            value_levels: VALUE_LEVELS,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(HdcError::config("hypervector dimension must be at least 1"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(HdcError::config("image geometry must be non-empty"));
        }
        if self.value_levels != VALUE_LEVELS {
            return Err(HdcError::config(format!(
                "value memory must cover all {VALUE_LEVELS} greyscale levels, got {}",
                self.value_levels
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.image_width * self.image_height
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Seeded position and value memories.
///
/// Both tables are stored as contiguous rows of `dimension` bipolar `i8`
/// components: position rows are indexed by the row-major pixel index,
/// value rows by the greyscale level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemMemory {
    config: EncoderConfig,
    positions: Vec<i8>,
    values: Vec<i8>,
    /// Encoding of an all-zero image.
    background: Vec<i32>,
}

impl ItemMemory {
    /// Draws all position rows, then all value rows, from one ChaCha8
    /// stream seeded with `config.seed`.
    pub fn generate(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dimension;
        let mut rng = seeded_rng(config.seed);
        let mut positions = vec![0i8; config.pixel_count() * d];
        for row in positions.chunks_mut(d) {
            fill_bipolar(row, &mut rng);
        }
        let mut values = vec![0i8; config.value_levels * d];
        for row in values.chunks_mut(d) {
            fill_bipolar(row, &mut rng);
        }
        ItemMemory::from_tables(config, positions, values)
    }

    /// Builds an item memory from explicit tables (row-major, `dimension`
    /// components per row). Every component must be -1 or +1.
    pub fn from_tables(config: EncoderConfig, positions: Vec<i8>, values: Vec<i8>) -> Result<Self> {
        config.validate()?;
        let d = config.dimension;
        check_len(config.pixel_count() * d, positions.len())?;
        check_len(config.value_levels * d, values.len())?;
        if let Some(bad) = positions.iter().chain(&values).find(|&&c| c != 1 && c != -1) {
            return Err(HdcError::domain(format!(
                "item memory components must be bipolar, found {bad}"
            )));
        }
        let mut background = vec![0i32; d];
        let zero_value = &values[..d];
        for pos in positions.chunks_exact(d) {
            for ((acc, &p), &v) in background.iter_mut().zip(pos).zip(zero_value) {
                *acc += i32::from(p * v);
            }
        }
        Ok(ItemMemory {
            config,
            positions,
            values,
            background,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn position(&self, index: usize) -> &[i8] {
        let d = self.dimension();
        &self.positions[index * d..(index + 1) * d]
    }

    pub fn value(&self, level: usize) -> &[i8] {
        let d = self.dimension();
        &self.values[level * d..(level + 1) * d]
    }

    pub fn position_hv(&self, index: usize) -> Result<Hypervector> {
        self.check_index(index)?;
        Ok(Hypervector::from_bipolar(self.position(index)))
    }

    pub fn value_hv(&self, level: usize) -> Result<Hypervector> {
        self.check_level(level)?;
        Ok(Hypervector::from_bipolar(self.value(level)))
    }

    pub(crate) fn positions_raw(&self) -> &[i8] {
        &self.positions
    }

    pub(crate) fn values_raw(&self) -> &[i8] {
        &self.values
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.config.pixel_count() {
            return Err(HdcError::domain(format!(
                "pixel index {index} out of range 0..{}",
                self.config.pixel_count()
            )));
        }
        Ok(())
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.config.value_levels {
            return Err(HdcError::domain(format!(
                "pixel value {level} out of range 0..{}",
                self.config.value_levels
            )));
        }
        Ok(())
    }

    fn check_geometry(&self, image: &Image) -> Result<()> {
        if image.width() != self.config.image_width || image.height() != self.config.image_height {
            return Err(HdcError::Dimension {
                expected: self.config.pixel_count(),
                found: image.pixels().len(),
            });
        }
        Ok(())
    }

    /// Encodes row-major pixels into `out`, overwriting it.
    pub(crate) fn encode_into<T>(&self, pixels: &[u8], out: &mut [T])
    where
        T: Copy + From<i8> + Add<Output = T> + Mul<Output = T> + TryFrom<i32>,
        <T as TryFrom<i32>>::Error: std::fmt::Debug,
    {
        let d = self.dimension();
        debug_assert_eq!(out.len(), d);
        debug_assert_eq!(pixels.len(), self.config.pixel_count());
        for (o, &b) in out.iter_mut().zip(&self.background) {
            *o = T::try_from(b).expect("background fits accumulator");
        }
        let zero_value = &self.values[..d];
        for (index, &level) in pixels.iter().enumerate() {
            if level == 0 {
                continue;
            }
            let pos = &self.positions[index * d..(index + 1) * d];
            let val = &self.values[usize::from(level) * d..(usize::from(level) + 1) * d];
            for (((o, &p), &v), &z) in out.iter_mut().zip(pos).zip(val).zip(zero_value) {
                // v - z is in {-2, 0, 2}
                *o = *o + T::from(p) * T::from(v - z);
            }
        }
    }
}

/// `position[index] ⊛ value[level]`.
pub fn encode_pixel(mem: &ItemMemory, index: usize, value: usize) -> Result<Hypervector> {
    mem.check_index(index)?;
    mem.check_level(value)?;
    Ok(Hypervector::new(
        mem.position(index)
            .iter()
            .zip(mem.value(value))
            .map(|(&p, &v)| i32::from(p * v))
            .collect(),
    ))
}

/// Bundle of the bound position/value hypervectors of every pixel,
/// flattened row-major.
pub fn encode_image(mem: &ItemMemory, image: &Image) -> Result<Hypervector> {
    mem.check_geometry(image)?;
    let mut out = vec![0i32; mem.dimension()];
    mem.encode_into(image.pixels(), &mut out);
    Ok(Hypervector::new(out))
}

/// Image encoding stored as `i16`. Valid while the pixel count is at most
/// `i16::MAX`, which bounds every component.
pub(crate) fn encode_image_compact(mem: &ItemMemory, image: &Image, out: &mut [i16]) -> Result<()> {
    mem.check_geometry(image)?;
    if mem.config.pixel_count() > i16::MAX as usize {
        return Err(HdcError::config("image too large for compact encoding"));
    }
    check_len(mem.dimension(), out.len())?;
    mem.encode_into(image.pixels(), out);
    Ok(())
}
