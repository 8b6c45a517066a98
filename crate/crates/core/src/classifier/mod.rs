//! Associative-memory classifier.
//!
//! Training adds each image hypervector into the class hypervector of its
//! label. Prediction picks the class whose hypervector has the highest cosine
//! similarity with the query; ties go to the lowest class index and a class
//! that was never trained (zero norm) never wins.

mod persist;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_len, HdcError, Result};
use crate::hdc::{
    cosine_from_parts, dot, encode_image, encode_image_compact, norm_sq, EncoderConfig,
    Hypervector, ItemMemory,
};
use crate::image::Image;

pub use persist::{MODEL_MAGIC, MODEL_VERSION};

pub const MNIST_CLASSES: usize = 10;

/// One accumulated hypervector per class, stored contiguously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociativeMemory {
    dimension: usize,
    num_classes: usize,
    class_hvs: Vec<i32>,
    norms_sq: Vec<i64>,
}

impl AssociativeMemory {
    /// All class hypervectors start at zero.
    pub fn new(num_classes: usize, dimension: usize) -> Self {
        AssociativeMemory {
            dimension,
            num_classes,
            class_hvs: vec![0; num_classes * dimension],
            norms_sq: vec![0; num_classes],
        }
    }

    pub fn from_class_hvs(class_hvs: &[Hypervector]) -> Result<Self> {
        let first = class_hvs
            .first()
            .ok_or_else(|| HdcError::domain("associative memory needs at least one class"))?;
        let dimension = first.dimension();
        let mut am = AssociativeMemory::new(class_hvs.len(), dimension);
        for (class, hv) in class_hvs.iter().enumerate() {
            check_len(dimension, hv.dimension())?;
            am.class_mut(class).copy_from_slice(hv.components());
            am.refresh_norm(class);
        }
        Ok(am)
    }

    pub(crate) fn from_raw(num_classes: usize, dimension: usize, class_hvs: Vec<i32>) -> Self {
        let mut am = AssociativeMemory {
            dimension,
            num_classes,
            class_hvs,
            norms_sq: vec![0; num_classes],
        };
        for class in 0..num_classes {
            am.refresh_norm(class);
        }
        am
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn class_hv(&self, class: usize) -> &[i32] {
        &self.class_hvs[class * self.dimension..(class + 1) * self.dimension]
    }

    pub fn class_hypervector(&self, class: usize) -> Hypervector {
        Hypervector::new(self.class_hv(class).to_vec())
    }

    pub(crate) fn raw(&self) -> &[i32] {
        &self.class_hvs
    }

    fn class_mut(&mut self, class: usize) -> &mut [i32] {
        &mut self.class_hvs[class * self.dimension..(class + 1) * self.dimension]
    }

    fn refresh_norm(&mut self, class: usize) {
        self.norms_sq[class] = norm_sq(self.class_hv(class));
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes {
            return Err(HdcError::domain(format!(
                "label {class} out of range 0..{}",
                self.num_classes
            )));
        }
        Ok(())
    }

    pub fn is_untrained(&self) -> bool {
        self.norms_sq.iter().all(|&n| n == 0)
    }

    /// `class_hvs[class] += hv`
    pub fn add<T: Copy + Into<i32>>(&mut self, class: usize, hv: &[T]) -> Result<()> {
        self.check_class(class)?;
        check_len(self.dimension, hv.len())?;
        for (a, &h) in self.class_mut(class).iter_mut().zip(hv) {
            *a += h.into();
        }
        self.refresh_norm(class);
        Ok(())
    }

    /// `class_hvs[class] -= hv`
    pub fn subtract<T: Copy + Into<i32>>(&mut self, class: usize, hv: &[T]) -> Result<()> {
        self.check_class(class)?;
        check_len(self.dimension, hv.len())?;
        for (a, &h) in self.class_mut(class).iter_mut().zip(hv) {
            *a -= h.into();
        }
        self.refresh_norm(class);
        Ok(())
    }

    /// Scales one class hypervector by a positive integer.
    pub fn scale_class(&mut self, class: usize, factor: i32) -> Result<()> {
        self.check_class(class)?;
        if factor <= 0 {
            return Err(HdcError::domain("scale factor must be positive"));
        }
        for a in self.class_mut(class) {
            *a *= factor;
        }
        self.refresh_norm(class);
        Ok(())
    }

    /// Component-wise sum over all class hypervectors.
    pub fn class_sum(&self) -> Vec<i64> {
        let mut sum = vec![0i64; self.dimension];
        for row in self.class_hvs.chunks_exact(self.dimension) {
            for (s, &c) in sum.iter_mut().zip(row) {
                *s += i64::from(c);
            }
        }
        sum
    }

    /// Cosine similarity of `query` with every class hypervector.
    pub fn similarities<T: Copy + Into<i64>>(&self, query: &[T]) -> Result<Vec<f64>> {
        check_len(self.dimension, query.len())?;
        let query_norm = norm_sq(query);
        Ok((0..self.num_classes)
            .map(|c| cosine_from_parts(dot(query, self.class_hv(c)), query_norm, self.norms_sq[c]))
            .collect())
    }

    /// Arg-max of cosine similarity; lowest index on ties, zero-norm classes
    /// excluded unless every class is zero.
    pub fn predict_encoded<T: Copy + Into<i64>>(&self, query: &[T]) -> Result<u8> {
        let sims = self.similarities(query)?;
        let mut best: Option<(usize, f64)> = None;
        for (class, &sim) in sims.iter().enumerate() {
            if self.norms_sq[class] == 0 {
                continue;
            }
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((class, sim));
            }
        }
        Ok(best.map_or(0, |(c, _)| c) as u8)
    }
}

/// An encoder (item memory) plus its trained associative memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HdcClassifier {
    item_memory: Arc<ItemMemory>,
    am: AssociativeMemory,
}

impl HdcClassifier {
    /// Fresh classifier with a seeded item memory and an all-zero AM.
    pub fn new(config: EncoderConfig) -> Result<Self> {
        Ok(HdcClassifier::with_item_memory(
            Arc::new(ItemMemory::generate(config)?),
            MNIST_CLASSES,
        ))
    }

    pub fn with_item_memory(item_memory: Arc<ItemMemory>, num_classes: usize) -> Self {
        let dimension = item_memory.dimension();
        HdcClassifier {
            item_memory,
            am: AssociativeMemory::new(num_classes, dimension),
        }
    }

    pub fn from_parts(item_memory: Arc<ItemMemory>, am: AssociativeMemory) -> Result<Self> {
        check_len(item_memory.dimension(), am.dimension())?;
        Ok(HdcClassifier { item_memory, am })
    }

    pub fn seed(&self) -> u64 {
        self.item_memory.seed()
    }

    pub fn config(&self) -> &EncoderConfig {
        self.item_memory.config()
    }

    pub fn dimension(&self) -> usize {
        self.item_memory.dimension()
    }

    pub fn item_memory(&self) -> &ItemMemory {
        &self.item_memory
    }

    pub fn am(&self) -> &AssociativeMemory {
        &self.am
    }

    pub fn am_mut(&mut self) -> &mut AssociativeMemory {
        &mut self.am
    }

    pub fn encode(&self, image: &Image) -> Result<Hypervector> {
        encode_image(&self.item_memory, image)
    }

    pub(crate) fn encode_compact(&self, image: &Image, out: &mut [i16]) -> Result<()> {
        encode_image_compact(&self.item_memory, image, out)
    }

    /// Single pass of accumulation: `am[label] += encode(image)` for every pair.
    pub fn train(&mut self, images: &[Image], labels: &[u8]) -> Result<()> {
        check_len(images.len(), labels.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= self.am.num_classes()) {
            return Err(HdcError::domain(format!(
                "label {bad} out of range 0..{}",
                self.am.num_classes()
            )));
        }
        let d = self.dimension();
        let classes = self.am.num_classes();
        let partial = images
            .par_iter()
            .zip(labels)
            .try_fold(
                || (vec![0i32; classes * d], vec![0i16; d]),
                |(mut acc, mut buf), (image, &label)| -> Result<_> {
                    self.encode_compact(image, &mut buf)?;
                    let row = &mut acc[usize::from(label) * d..(usize::from(label) + 1) * d];
                    for (a, &h) in row.iter_mut().zip(&buf) {
                        *a += i32::from(h);
                    }
                    Ok((acc, buf))
                },
            )
            .map(|partial| partial.map(|(acc, _)| acc))
            .try_reduce(
                || vec![0i32; classes * d],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )?;
        for (class, row) in partial.chunks_exact(d).enumerate() {
            self.am.add(class, row)?;
        }
        Ok(())
    }

    /// Trains on images using their own labels; every image must carry one.
    pub fn train_labeled(&mut self, images: &[Image]) -> Result<()> {
        let labels = labels_of(images)?;
        self.train(images, &labels)
    }

    pub fn similarities(&self, image: &Image) -> Result<Vec<f64>> {
        self.am.similarities(self.encode(image)?.components())
    }

    pub fn predict(&self, image: &Image) -> Result<u8> {
        self.am.predict_encoded(self.encode(image)?.components())
    }

    pub fn predict_batch(&self, images: &[Image]) -> Result<Vec<u8>> {
        let d = self.dimension();
        images
            .par_iter()
            .map_init(
                || vec![0i16; d],
                |buf, image| {
                    self.encode_compact(image, buf)?;
                    self.am.predict_encoded(buf)
                },
            )
            .collect()
    }

    /// Fraction of images whose prediction equals the given label.
    pub fn evaluate(&self, images: &[Image], labels: &[u8]) -> Result<f64> {
        check_len(images.len(), labels.len())?;
        if images.is_empty() {
            return Err(HdcError::domain("cannot evaluate on an empty dataset"));
        }
        let predictions = self.predict_batch(images)?;
        Ok(accuracy(&predictions, labels))
    }

    pub fn evaluate_labeled(&self, images: &[Image]) -> Result<f64> {
        let labels = labels_of(images)?;
        self.evaluate(images, &labels)
    }
}

pub(crate) fn accuracy(predictions: &[u8], labels: &[u8]) -> f64 {
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    correct as f64 / labels.len() as f64
}

pub fn labels_of(images: &[Image]) -> Result<Vec<u8>> {
    images
        .iter()
        .map(|image| {
            image
                .label
                .ok_or_else(|| HdcError::domain(format!("image {} has no label", image.id)))
        })
        .collect()
}
