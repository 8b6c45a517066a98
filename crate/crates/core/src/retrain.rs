//! Retraining an ensemble on difference-inducing inputs.
//!
//! One retraining step, per record and per classifier, subtracts the image
//! hypervector from the class the classifier currently predicts and adds it
//! to the true class. Records are visited in image-id order and each
//! prediction sees the updates made by earlier records. When the prediction
//! is already correct the subtraction and addition cancel.
//!
//! Static retraining reuses the initial record set every epoch. Dynamic
//! retraining re-partitions after every epoch and keeps only the inputs the
//! ensemble still disagrees on, either among the current records
//! ([`Refresh::Records`]) or across a larger candidate pool
//! ([`Refresh::Pool`]).
//!
//! Image encodings depend only on the item memories, which retraining never
//! touches, so they are computed once per classifier and cached as `i16`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{accuracy, labels_of, HdcClassifier};
use crate::difftest::{disagree, DiscrepancyRecord};
use crate::error::{HdcError, Result};
use crate::image::Image;

pub const DEFAULT_EPOCHS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrainMode {
    Static,
    Dynamic,
}

impl fmt::Display for RetrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RetrainMode::Static => "static",
            RetrainMode::Dynamic => "dynamic",
        })
    }
}

impl FromStr for RetrainMode {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(RetrainMode::Static),
            "dynamic" => Ok(RetrainMode::Dynamic),
            other => Err(HdcError::domain(format!("unknown retraining mode {other:?}"))),
        }
    }
}

/// Where dynamic retraining looks for the next epoch's records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshScope {
    /// Re-partition the current difference-inducing images only.
    Dis,
    /// Re-partition the whole validation split plus generated images.
    Validation,
}

impl FromStr for RefreshScope {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dis" => Ok(RefreshScope::Dis),
            "validation" => Ok(RefreshScope::Validation),
            other => Err(HdcError::domain(format!("unknown refresh scope {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrainConfig {
    pub mode: RetrainMode,
    pub epochs: usize,
    pub use_perturbation: bool,
    pub refresh_scope: RefreshScope,
}

impl RetrainConfig {
    pub fn new(mode: RetrainMode, epochs: usize, use_perturbation: bool) -> Result<Self> {
        let config = RetrainConfig {
            mode,
            epochs,
            use_perturbation,
            refresh_scope: RefreshScope::Dis,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(HdcError::domain("epochs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    /// 0 is the state before retraining.
    pub epoch: usize,
    /// Test accuracy of each classifier, in ensemble order.
    pub per_classifier_test_accuracy: Vec<f64>,
    /// Disagreements within this epoch's record set.
    pub discrepancy_count: usize,
    /// Disagreements on the held-out test set.
    pub test_discrepancy_count: usize,
}

impl EpochMetrics {
    pub fn mean_accuracy(&self) -> f64 {
        let accs = &self.per_classifier_test_accuracy;
        accs.iter().sum::<f64>() / accs.len().max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetrainOutcome {
    pub initial: EpochMetrics,
    /// Exactly one entry per epoch.
    pub epochs: Vec<EpochMetrics>,
}

impl RetrainOutcome {
    /// Initial row followed by every epoch.
    pub fn rows(&self) -> impl Iterator<Item = &EpochMetrics> {
        std::iter::once(&self.initial).chain(&self.epochs)
    }

    pub fn last(&self) -> &EpochMetrics {
        self.epochs.last().unwrap_or(&self.initial)
    }

    pub fn peak_mean_accuracy(&self) -> f64 {
        self.rows().map(|m| m.mean_accuracy()).fold(f64::MIN, f64::max)
    }
}

/// Compact encodings of a fixed image list under one classifier.
#[derive(Clone, Debug)]
pub struct EncodedSet {
    dimension: usize,
    data: Vec<i16>,
}

impl EncodedSet {
    pub fn encode(classifier: &HdcClassifier, images: &[Image]) -> Result<Self> {
        let d = classifier.dimension();
        let mut data = vec![0i16; images.len() * d];
        data.par_chunks_mut(d)
            .zip(images)
            .try_for_each(|(row, image)| classifier.encode_compact(image, row))?;
        Ok(EncodedSet { dimension: d, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dimension.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[i16] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn predict_all(&self, classifier: &HdcClassifier) -> Result<Vec<u8>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| classifier.am().predict_encoded(self.get(i)))
            .collect()
    }
}

/// Encodes `images` under every classifier.
fn encode_ensemble(classifiers: &[HdcClassifier], images: &[Image]) -> Result<Vec<EncodedSet>> {
    classifiers
        .iter()
        .map(|c| EncodedSet::encode(c, images))
        .collect()
}

fn predict_ensemble(classifiers: &[HdcClassifier], encoded: &[EncodedSet]) -> Result<Vec<Vec<u8>>> {
    classifiers
        .iter()
        .zip(encoded)
        .map(|(c, e)| e.predict_all(c))
        .collect()
}

fn disagreeing(table: &[Vec<u8>], indices: impl Iterator<Item = usize>) -> Vec<usize> {
    indices
        .filter(|&i| {
            let labels: Vec<u8> = table.iter().map(|row| row[i]).collect();
            disagree(&labels)
        })
        .collect()
}

/// Held-out images used for per-epoch accuracy and test-set disagreement.
pub struct TestBench {
    seeds: Vec<u64>,
    labels: Vec<u8>,
    encoded: Vec<EncodedSet>,
}

impl TestBench {
    pub fn new(classifiers: &[HdcClassifier], images: &[Image]) -> Result<Self> {
        if images.is_empty() {
            return Err(HdcError::domain("test set is empty"));
        }
        Ok(TestBench {
            seeds: classifiers.iter().map(|c| c.seed()).collect(),
            labels: labels_of(images)?,
            encoded: encode_ensemble(classifiers, images)?,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-classifier predictions on the test images.
    pub fn predictions(&self, classifiers: &[HdcClassifier]) -> Result<Vec<Vec<u8>>> {
        let seeds: Vec<u64> = classifiers.iter().map(|c| c.seed()).collect();
        if seeds != self.seeds {
            return Err(HdcError::config(format!(
                "test bench was built for seeds {:?}, got {seeds:?}",
                self.seeds
            )));
        }
        predict_ensemble(classifiers, &self.encoded)
    }

    /// `(accuracy per classifier, number of disagreeing test images)`.
    pub fn evaluate(&self, classifiers: &[HdcClassifier]) -> Result<(Vec<f64>, usize)> {
        let table = self.predictions(classifiers)?;
        let accs = table.iter().map(|p| accuracy(p, &self.labels)).collect();
        let dis = disagreeing(&table, 0..self.len()).len();
        Ok((accs, dis))
    }
}

fn record_labels(records: &[&DiscrepancyRecord]) -> Result<Vec<u8>> {
    records
        .iter()
        .map(|r| {
            r.true_label.ok_or_else(|| {
                HdcError::domain(format!("record {} has no true label", r.image_id))
            })
        })
        .collect()
}

fn canonical(records: &[DiscrepancyRecord]) -> Vec<&DiscrepancyRecord> {
    let mut sorted: Vec<&DiscrepancyRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    sorted
}

/// Applies one pass of updates over `order` (indices into `encoded`).
fn update_classifier(
    classifier: &mut HdcClassifier,
    encoded: &EncodedSet,
    labels: &[u8],
    order: &[usize],
) -> Result<()> {
    for &i in order {
        let hv = encoded.get(i);
        let predicted = classifier.am().predict_encoded(hv)?;
        let truth = labels[i];
        if predicted != truth {
            let am = classifier.am_mut();
            am.subtract(usize::from(predicted), hv)?;
            am.add(usize::from(truth), hv)?;
        }
    }
    Ok(())
}

fn retrain_pass(
    classifiers: &mut [HdcClassifier],
    encoded: &[EncodedSet],
    labels: &[u8],
    order: &[usize],
) -> Result<()> {
    classifiers
        .par_iter_mut()
        .zip(encoded)
        .try_for_each(|(c, e)| update_classifier(c, e, labels, order))
}

/// One epoch over `records` (visited in image-id order). Every record must
/// carry a true label.
pub fn retrain_epoch(classifiers: &mut [HdcClassifier], records: &[DiscrepancyRecord]) -> Result<()> {
    let sorted = canonical(records);
    let labels = record_labels(&sorted)?;
    let images: Vec<Image> = sorted.iter().map(|r| r.image.clone()).collect();
    let encoded = encode_ensemble(classifiers, &images)?;
    let order: Vec<usize> = (0..images.len()).collect();
    retrain_pass(classifiers, &encoded, &labels, &order)
}

fn metrics(
    epoch: usize,
    classifiers: &[HdcClassifier],
    bench: &TestBench,
    discrepancy_count: usize,
) -> Result<EpochMetrics> {
    let (accs, test_dis) = bench.evaluate(classifiers)?;
    Ok(EpochMetrics {
        epoch,
        per_classifier_test_accuracy: accs,
        discrepancy_count,
        test_discrepancy_count: test_dis,
    })
}

/// Retrains on the same records every epoch. `discrepancy_count` counts the
/// records the ensemble still disagrees on after the epoch.
pub fn static_retrain(
    classifiers: &mut [HdcClassifier],
    initial_records: &[DiscrepancyRecord],
    epochs: usize,
    bench: &TestBench,
) -> Result<RetrainOutcome> {
    static_retrain_with(classifiers, initial_records, epochs, bench, |_| {})
}

pub fn static_retrain_with(
    classifiers: &mut [HdcClassifier],
    initial_records: &[DiscrepancyRecord],
    epochs: usize,
    bench: &TestBench,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<RetrainOutcome> {
    if epochs == 0 {
        return Err(HdcError::domain("epochs must be at least 1"));
    }
    let sorted = canonical(initial_records);
    let labels = record_labels(&sorted)?;
    let images: Vec<Image> = sorted.iter().map(|r| r.image.clone()).collect();
    let encoded = encode_ensemble(classifiers, &images)?;
    let order: Vec<usize> = (0..images.len()).collect();
    let count = |classifiers: &[HdcClassifier]| -> Result<usize> {
        let table = predict_ensemble(classifiers, &encoded)?;
        Ok(disagreeing(&table, 0..images.len()).len())
    };

    let initial = metrics(0, classifiers, bench, count(classifiers)?)?;
    on_epoch(&initial);
    let mut rows = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        retrain_pass(classifiers, &encoded, &labels, &order)?;
        let m = metrics(epoch, classifiers, bench, count(classifiers)?)?;
        on_epoch(&m);
        rows.push(m);
    }
    Ok(RetrainOutcome {
        initial,
        epochs: rows,
    })
}

/// Candidate set for dynamic retraining.
#[derive(Clone, Copy, Debug)]
pub enum Refresh<'a> {
    /// Next epoch's records are the current records still disagreed on.
    Records,
    /// Next epoch's records are every image of the pool (plus the initial
    /// records) still disagreed on.
    Pool(&'a [Image]),
}

/// Retrains, then re-partitions, every epoch. `discrepancy_count` is the size
/// of the record set that the next epoch will use.
pub fn dynamic_retrain(
    classifiers: &mut [HdcClassifier],
    initial_records: &[DiscrepancyRecord],
    epochs: usize,
    bench: &TestBench,
    refresh: Refresh<'_>,
) -> Result<RetrainOutcome> {
    dynamic_retrain_with(classifiers, initial_records, epochs, bench, refresh, |_| {})
}

pub fn dynamic_retrain_with(
    classifiers: &mut [HdcClassifier],
    initial_records: &[DiscrepancyRecord],
    epochs: usize,
    bench: &TestBench,
    refresh: Refresh<'_>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<RetrainOutcome> {
    if epochs == 0 {
        return Err(HdcError::domain("epochs must be at least 1"));
    }
    let sorted = canonical(initial_records);
    record_labels(&sorted)?;

    // Candidate images sorted by id; `current` indexes into them.
    let mut pool: Vec<Image> = sorted.iter().map(|r| r.image.clone()).collect();
    if let Refresh::Pool(extra) = refresh {
        pool.extend(extra.iter().cloned());
        pool.sort_by(|a, b| a.id.cmp(&b.id));
        pool.dedup_by(|a, b| a.id == b.id);
    }
    let labels = labels_of(&pool)?;
    let encoded = encode_ensemble(classifiers, &pool)?;
    let mut current: Vec<usize> = match refresh {
        Refresh::Records => (0..pool.len()).collect(),
        Refresh::Pool(_) => {
            let initial_ids: std::collections::HashSet<_> =
                sorted.iter().map(|r| &r.image_id).collect();
            (0..pool.len())
                .filter(|&i| initial_ids.contains(&pool[i].id))
                .collect()
        }
    };

    let initial = metrics(0, classifiers, bench, current.len())?;
    on_epoch(&initial);
    let mut rows = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        retrain_pass(classifiers, &encoded, &labels, &current)?;
        let table = predict_ensemble(classifiers, &encoded)?;
        current = match refresh {
            Refresh::Records => disagreeing(&table, current.into_iter()),
            Refresh::Pool(_) => disagreeing(&table, 0..pool.len()),
        };
        let m = metrics(epoch, classifiers, bench, current.len())?;
        on_epoch(&m);
        rows.push(m);
    }
    Ok(RetrainOutcome {
        initial,
        epochs: rows,
    })
}
