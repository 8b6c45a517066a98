//! Differential testing of a classifier ensemble.
//!
//! The ensemble is only ever asked for predictions through
//! [`BlackboxClassifier`]; nothing here can see item memories or class
//! hypervectors. An input is difference-inducing when the ensemble members do
//! not all predict the same label.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::HdcClassifier;
use crate::error::{HdcError, Result};
use crate::image::{Image, ImageId};
use crate::perturb::{PerturbationKind, PerturbationSpec};
use crate::rng::{derive_seed, hash_str, seeded_rng};

/// Prediction-only view of a classifier.
pub trait BlackboxClassifier: Sync {
    /// Identifies the ensemble member (the seed of its random parameters).
    fn seed(&self) -> u64;

    fn predict(&self, image: &Image) -> Result<u8>;

    fn predict_batch(&self, images: &[Image]) -> Result<Vec<u8>> {
        images.iter().map(|image| self.predict(image)).collect()
    }
}

impl BlackboxClassifier for HdcClassifier {
    fn seed(&self) -> u64 {
        HdcClassifier::seed(self)
    }

    fn predict(&self, image: &Image) -> Result<u8> {
        HdcClassifier::predict(self, image)
    }

    fn predict_batch(&self, images: &[Image]) -> Result<Vec<u8>> {
        HdcClassifier::predict_batch(self, images)
    }
}

impl<T: BlackboxClassifier + ?Sized> BlackboxClassifier for &T {
    fn seed(&self) -> u64 {
        (**self).seed()
    }

    fn predict(&self, image: &Image) -> Result<u8> {
        (**self).predict(image)
    }

    fn predict_batch(&self, images: &[Image]) -> Result<Vec<u8>> {
        (**self).predict_batch(images)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Perturbed {
        kind: PerturbationKind,
        parent: ImageId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeedPrediction {
    pub seed: u64,
    pub label: u8,
}

/// An input on which the ensemble disagrees.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyRecord {
    pub image_id: ImageId,
    /// One entry per ensemble member, in ensemble order.
    pub predictions: Vec<SeedPrediction>,
    pub true_label: Option<u8>,
    pub provenance: Provenance,
    /// Seed of the member compared against the rest, for generated inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_seed: Option<u64>,
    #[serde(skip)]
    pub image: Image,
}

impl DiscrepancyRecord {
    fn new(image: Image, seeds: &[u64], labels: &[u8], probe_seed: Option<u64>) -> Self {
        let provenance = match image.id.variant {
            None => Provenance::Original,
            Some(kind) => Provenance::Perturbed {
                kind,
                parent: image.id.parent(),
            },
        };
        DiscrepancyRecord {
            image_id: image.id.clone(),
            predictions: seeds
                .iter()
                .zip(labels)
                .map(|(&seed, &label)| SeedPrediction { seed, label })
                .collect(),
            true_label: image.label,
            provenance,
            probe_seed,
            image,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.predictions.iter().map(|p| p.label)
    }

    pub fn is_generated(&self) -> bool {
        matches!(self.provenance, Provenance::Perturbed { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffTestReport {
    pub discrepancy_count: usize,
    pub generated_count: usize,
    pub records: Vec<DiscrepancyRecord>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl DiffTestReport {
    pub fn new(mut records: Vec<DiscrepancyRecord>, elapsed: Duration) -> Self {
        records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        DiffTestReport {
            discrepancy_count: records.len(),
            generated_count: records.iter().filter(|r| r.is_generated()).count(),
            records,
            elapsed,
        }
    }

    /// Difference-inducing inputs found per second of wall time.
    pub fn throughput(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.discrepancy_count as f64 / secs
        } else {
            0.0
        }
    }
}

/// True when the labels are not all equal.
pub fn disagree(labels: &[u8]) -> bool {
    labels.windows(2).any(|w| w[0] != w[1])
}

fn check_ensemble<C: BlackboxClassifier>(classifiers: &[C]) -> Result<Vec<u64>> {
    if classifiers.len() < 2 {
        return Err(HdcError::config(format!(
            "differential testing needs at least 2 classifiers, got {}",
            classifiers.len()
        )));
    }
    Ok(classifiers.iter().map(|c| c.seed()).collect())
}

/// `table[c][i]` is classifier `c`'s prediction for image `i`.
fn prediction_table<C: BlackboxClassifier>(classifiers: &[C], images: &[Image]) -> Result<Vec<Vec<u8>>> {
    classifiers.iter().map(|c| c.predict_batch(images)).collect()
}

fn column(table: &[Vec<u8>], i: usize) -> Vec<u8> {
    table.iter().map(|row| row[i]).collect()
}

/// Splits `images` into the difference-inducing ones and the rest, both in
/// input order.
pub fn discrepancies<C: BlackboxClassifier>(
    classifiers: &[C],
    images: &[Image],
) -> Result<(Vec<DiscrepancyRecord>, Vec<Image>)> {
    let seeds = check_ensemble(classifiers)?;
    let table = prediction_table(classifiers, images)?;
    let mut dis = Vec::new();
    let mut agreed = Vec::new();
    for (i, image) in images.iter().enumerate() {
        let labels = column(&table, i);
        if disagree(&labels) {
            dis.push(DiscrepancyRecord::new(image.clone(), &seeds, &labels, None));
        } else {
            agreed.push(image.clone());
        }
    }
    Ok((dis, agreed))
}

/// Seed for perturbing one image with one spec; independent of processing order.
pub fn perturbation_seed(spec: &PerturbationSpec, id: &ImageId) -> u64 {
    derive_seed(
        spec.rng_seed,
        &[hash_str(&id.source), u64::from(id.index), spec.kind().code()],
    )
}

/// Picks the ensemble member compared against the others for one image.
pub fn probe_index(rng_seed: u64, id: &ImageId, ensemble_size: usize) -> usize {
    let mut rng = seeded_rng(derive_seed(rng_seed, &[hash_str(&id.source), u64::from(id.index)]));
    rng.random_range(0..ensemble_size)
}

const CHUNK: usize = 2048;

/// Perturbs every agreed-upon image with every spec and keeps the perturbed
/// images on which a randomly chosen member disagrees with at least one other
/// member. The member is drawn once per image. Output is sorted by image id
/// (parent, then perturbation kind).
pub fn generate_difference_inducing<C: BlackboxClassifier>(
    classifiers: &[C],
    non_dis: &[Image],
    perturbations: &[PerturbationSpec],
    rng_seed: u64,
) -> Result<Vec<DiscrepancyRecord>> {
    let seeds = check_ensemble(classifiers)?;
    if perturbations.is_empty() || non_dis.is_empty() {
        return Ok(Vec::new());
    }
    for spec in perturbations {
        spec.params.validate()?;
    }
    if let Some(image) = non_dis.iter().find(|x| x.label.is_none()) {
        return Err(HdcError::domain(format!(
            "image {} has no true label to pass on to its perturbations",
            image.id
        )));
    }
    let mut out = Vec::new();
    for parents in non_dis.chunks(CHUNK) {
        let perturbed: Vec<(usize, Image)> = parents
            .par_iter()
            .flat_map_iter(|image| {
                let probe = probe_index(rng_seed, &image.id, seeds.len());
                perturbations.iter().map(move |spec| {
                    spec.with_seed(perturbation_seed(spec, &image.id))
                        .apply(image)
                        .map(|p| (probe, p))
                })
            })
            .collect::<Result<_>>()?;
        let images: Vec<Image> = perturbed.iter().map(|(_, x)| x.clone()).collect();
        let table = prediction_table(classifiers, &images)?;
        for (i, (probe, image)) in perturbed.into_iter().enumerate() {
            let labels = column(&table, i);
            let probe_label = labels[probe];
            let differs = labels
                .iter()
                .enumerate()
                .any(|(j, &l)| j != probe && l != probe_label);
            if differs {
                out.push(DiscrepancyRecord::new(image, &seeds, &labels, Some(seeds[probe])));
            }
        }
    }
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(out)
}

/// Number of (image, perturbation) pairs on which the ensemble disagrees.
/// Lower means more robust.
pub fn measure_robustness<C: BlackboxClassifier>(
    classifiers: &[C],
    agreed_test_images: &[Image],
    perturbations: &[PerturbationSpec],
    rng_seed: u64,
) -> Result<usize> {
    Ok(generate_difference_inducing(classifiers, agreed_test_images, perturbations, rng_seed)?.len())
}

/// Partition followed by the perturbation search on the agreed images.
pub fn run_difftest<C: BlackboxClassifier>(
    classifiers: &[C],
    images: &[Image],
    perturbations: &[PerturbationSpec],
    rng_seed: u64,
) -> Result<(DiffTestReport, Vec<Image>)> {
    let start = Instant::now();
    let (mut records, agreed) = discrepancies(classifiers, images)?;
    records.extend(generate_difference_inducing(
        classifiers,
        &agreed,
        perturbations,
        rng_seed,
    )?);
    Ok((DiffTestReport::new(records, start.elapsed()), agreed))
}
