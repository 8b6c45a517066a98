//! Hyperdimensional image classifiers and blackbox differential testing.
//!
//! * [`hdc`]: hypervector algebra and the position/value image encoder.
//! * [`classifier`]: associative-memory classifier, training and HDXM model files.
//! * [`perturb`]: skew, noise, brightness and elastic perturbations.
//! * [`difftest`]: finds inputs on which an ensemble of classifiers disagrees.
//! * [`retrain`]: static and dynamic retraining on those inputs.
//! * [`dataset`]: MNIST IDX loading and splitting.
//! * [`experiment`]: the end-to-end pipeline behind the `hdcdiff` binary.

pub mod classifier;
pub mod dataset;
pub mod difftest;
pub mod error;
pub mod experiment;
pub mod hdc;
pub mod image;
pub mod perturb;
pub mod report;
pub mod retrain;
pub mod rng;

pub use classifier::{AssociativeMemory, HdcClassifier, MNIST_CLASSES};
pub use dataset::{Dataset, SplitConfig};
pub use difftest::{
    discrepancies, generate_difference_inducing, measure_robustness, BlackboxClassifier,
    DiffTestReport, DiscrepancyRecord, Provenance,
};
pub use error::{HdcError, Result};
pub use hdc::{
    bind, bundle, cosine_similarity, encode_image, encode_pixel, EncoderConfig, Hypervector,
    ItemMemory,
};
pub use image::{Image, ImageId};
pub use perturb::{PerturbationKind, PerturbationParams, PerturbationSpec};
pub use retrain::{
    dynamic_retrain, retrain_epoch, static_retrain, EpochMetrics, RetrainConfig, RetrainMode,
    RetrainOutcome, TestBench,
};
