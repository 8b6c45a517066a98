//! End-to-end pipeline: train an ensemble, search for difference-inducing
//! inputs on the validation split, retrain, and compare robustness.
//!
//! Output directory layout:
//!
//! ```text
//! <out>/models/seed_<s>.hdxm            baseline models
//! <out>/train_report.json               baseline test accuracy per seed
//! <out>/difftest/manifest.json          difference-inducing inputs
//! <out>/difftest/images/*.pgm           perturbed difference-inducing images
//! <out>/retrain/<run>/metrics.csv       per-epoch metrics
//! <out>/retrain/<run>/summary.json
//! <out>/retrain/<run>/models/*.hdxm     retrained models
//! <out>/robustness.json
//! <out>/sweep.csv                       split-ratio sweep
//! ```
//!
//! `<run>` is `<mode>-perturbation` or `<mode>-no-perturbation`. Every file
//! is a deterministic function of the configuration; wall-clock timings are
//! only printed, never written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::classifier::HdcClassifier;
use crate::dataset::{load_mnist, Dataset, SplitConfig};
use crate::difftest::{discrepancies, run_difftest, BlackboxClassifier, DiffTestReport};
use crate::error::{HdcError, Result};
use crate::hdc::{EncoderConfig, DEFAULT_DIMENSION};
use crate::image::Image;
use crate::perturb::{PerturbationParams, PerturbationSpec};
use crate::report::{export_perturbed_pgms, metrics_csv, metrics_header, metrics_row, write_atomic, write_json};
use crate::retrain::{
    dynamic_retrain_with, static_retrain_with, EpochMetrics, Refresh, RefreshScope, RetrainMode,
    RetrainOutcome, TestBench, DEFAULT_EPOCHS,
};

pub const DEFAULT_SEEDS: [u64; 3] = [30, 40, 50];
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.5;
pub const DEFAULT_PERTURBATION_SEED: u64 = 1;
pub const DEFAULT_ROBUSTNESS_SEED: u64 = 2;

/// Parameters of the four perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerturbationSettings {
    pub skew_mean: f64,
    pub skew_std: f64,
    pub noise_points: usize,
    pub brightness: f64,
    pub elastic_alpha: f64,
    pub elastic_sigma: f64,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        use crate::perturb::*;
        PerturbationSettings {
            skew_mean: DEFAULT_SKEW_MEAN,
            skew_std: DEFAULT_SKEW_STD,
            noise_points: DEFAULT_NOISE_POINTS,
            brightness: DEFAULT_BRIGHTNESS,
            elastic_alpha: DEFAULT_ELASTIC_ALPHA,
            elastic_sigma: DEFAULT_ELASTIC_SIGMA,
        }
    }
}

impl PerturbationSettings {
    pub fn specs(&self, rng_seed: u64) -> Result<Vec<PerturbationSpec>> {
        [
            PerturbationParams::Skew {
                mean: self.skew_mean,
                std_dev: self.skew_std,
            },
            PerturbationParams::Noise {
                points: self.noise_points,
            },
            PerturbationParams::Brightness {
                factor: self.brightness,
            },
            PerturbationParams::Elastic {
                alpha: self.elastic_alpha,
                sigma: self.elastic_sigma,
            },
        ]
        .into_iter()
        .map(|params| PerturbationSpec::new(params, rng_seed))
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub dimension: usize,
    pub validation_fraction: f64,
    /// `None` keeps file order and takes the validation split from the tail.
    pub split_seed: Option<u64>,
    pub epochs: usize,
    pub mode: RetrainMode,
    pub perturbation: bool,
    pub perturbation_seed: u64,
    /// Seed for the perturbations used to measure robustness.
    pub robustness_seed: u64,
    pub perturbations: PerturbationSettings,
    pub refresh_scope: RefreshScope,
    #[serde(skip)]
    pub data_dir: PathBuf,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: DEFAULT_SEEDS.to_vec(),
            dimension: DEFAULT_DIMENSION,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            split_seed: None,
            epochs: DEFAULT_EPOCHS,
            mode: RetrainMode::Dynamic,
            perturbation: true,
            perturbation_seed: DEFAULT_PERTURBATION_SEED,
            robustness_seed: DEFAULT_ROBUSTNESS_SEED,
            perturbations: PerturbationSettings::default(),
            refresh_scope: RefreshScope::Dis,
            data_dir: PathBuf::from("data/mnist"),
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.len() < 2 {
            return Err(HdcError::config(format!(
                "an ensemble needs at least 2 seeds, got {}",
                self.seeds.len()
            )));
        }
        if self.epochs == 0 {
            return Err(HdcError::config("epochs must be at least 1"));
        }
        EncoderConfig::mnist(self.dimension, 0)?;
        SplitConfig::new(self.validation_fraction, self.split_seed)?;
        self.perturbations.specs(0)?;
        Ok(())
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            validation_fraction: self.validation_fraction,
            shuffle_seed: self.split_seed,
        }
    }

    pub fn models_dir(&self) -> PathBuf {
        self.output_dir.join("models")
    }

    pub fn retrain_run_name(&self) -> String {
        run_name(self.mode, self.perturbation)
    }

    pub fn retrain_dir(&self) -> PathBuf {
        self.output_dir.join("retrain").join(self.retrain_run_name())
    }
}

pub fn run_name(mode: RetrainMode, perturbation: bool) -> String {
    if perturbation {
        format!("{mode}-perturbation")
    } else {
        format!("{mode}-no-perturbation")
    }
}

pub fn model_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.hdxm"))
}

pub fn save_models(dir: &Path, ensemble: &[HdcClassifier]) -> Result<()> {
    for clf in ensemble {
        clf.save(&model_path(dir, clf.seed()))?;
    }
    Ok(())
}

pub fn load_models(dir: &Path, seeds: &[u64]) -> Result<Vec<HdcClassifier>> {
    seeds
        .iter()
        .map(|&seed| {
            let path = model_path(dir, seed);
            let clf = HdcClassifier::load(&path)?;
            if clf.seed() != seed {
                return Err(HdcError::config(format!(
                    "{} holds a model for seed {}",
                    path.display(),
                    clf.seed()
                )));
            }
            Ok(clf)
        })
        .collect()
}

/// Training, validation and test splits for one configuration.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedAccuracy {
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub config: ExperimentConfig,
    pub train_count: usize,
    pub validation_count: usize,
    pub test_count: usize,
    pub accuracy: Vec<SeedAccuracy>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DifftestManifest<'a> {
    pub perturbation: bool,
    pub validation_count: usize,
    pub agreed_count: usize,
    pub original_count: usize,
    #[serde(flatten)]
    pub report: &'a DiffTestReport,
}

/// Result of the search on the validation split.
pub struct DifftestRun {
    pub report: DiffTestReport,
    pub agreed_count: usize,
}

impl DifftestRun {
    pub fn original_count(&self) -> usize {
        self.report.discrepancy_count - self.report.generated_count
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RetrainSummary {
    pub run: String,
    pub mode: RetrainMode,
    pub perturbation: bool,
    pub refresh_scope: RefreshScope,
    pub epochs: usize,
    pub record_count: usize,
    pub initial: EpochMetrics,
    pub last: EpochMetrics,
    pub peak_mean_accuracy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessEntry {
    pub name: String,
    pub discrepancy_count: usize,
    pub ratio_to_baseline: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessReport {
    pub agreed_test_count: usize,
    pub perturbation_seed: u64,
    pub baseline: usize,
    pub sets: Vec<RobustnessEntry>,
}

impl Experiment {
    pub fn load(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (train_file, test) = load_mnist(&config.data_dir)?;
        Experiment::from_datasets(config, train_file, test)
    }

    pub fn from_datasets(config: ExperimentConfig, train_file: Dataset, test: Dataset) -> Result<Self> {
        config.validate()?;
        let (train, validation) = train_file.split(&config.split_config())?;
        Ok(Experiment {
            config,
            train,
            validation,
            test,
        })
    }

    /// Same data under a different configuration (re-split if the split changed).
    pub fn with_config(&self, config: ExperimentConfig) -> Result<Self> {
        if config.split_config() == self.config.split_config() {
            config.validate()?;
            return Ok(Experiment {
                config,
                train: self.train.clone(),
                validation: self.validation.clone(),
                test: self.test.clone(),
            });
        }
        let mut images = self.train.images.clone();
        images.extend(self.validation.images.iter().cloned());
        images.sort_by(|a, b| a.id.cmp(&b.id));
        Experiment::from_datasets(config, Dataset::new("train", images), self.test.clone())
    }

    pub fn train_ensemble(&self) -> Result<Vec<HdcClassifier>> {
        self.config
            .seeds
            .iter()
            .map(|&seed| {
                let mut clf = HdcClassifier::new(EncoderConfig::mnist(self.config.dimension, seed)?)?;
                clf.train_labeled(&self.train.images)?;
                Ok(clf)
            })
            .collect()
    }

    pub fn test_accuracies(&self, ensemble: &[HdcClassifier]) -> Result<Vec<SeedAccuracy>> {
        ensemble
            .iter()
            .map(|clf| {
                Ok(SeedAccuracy {
                    seed: clf.seed(),
                    accuracy: clf.evaluate_labeled(&self.test.images)?,
                })
            })
            .collect()
    }

    pub fn train_report(&self, accuracy: Vec<SeedAccuracy>) -> TrainReport {
        TrainReport {
            config: self.config.clone(),
            train_count: self.train.len(),
            validation_count: self.validation.len(),
            test_count: self.test.len(),
            accuracy,
        }
    }

    pub fn perturbation_specs(&self) -> Result<Vec<PerturbationSpec>> {
        self.config.perturbations.specs(self.config.perturbation_seed)
    }

    /// Partition of the validation split, plus the perturbation search when
    /// `perturbation` is set.
    pub fn difftest<C: BlackboxClassifier>(&self, ensemble: &[C], perturbation: bool) -> Result<DifftestRun> {
        let specs = if perturbation {
            self.perturbation_specs()?
        } else {
            Vec::new()
        };
        let (report, agreed) = run_difftest(
            ensemble,
            &self.validation.images,
            &specs,
            self.config.perturbation_seed,
        )?;
        Ok(DifftestRun {
            report,
            agreed_count: agreed.len(),
        })
    }

    pub fn difftest_manifest<'a>(&self, run: &'a DifftestRun, perturbation: bool) -> DifftestManifest<'a> {
        DifftestManifest {
            perturbation,
            validation_count: self.validation.len(),
            agreed_count: run.agreed_count,
            original_count: run.original_count(),
            report: &run.report,
        }
    }

    pub fn test_bench(&self, ensemble: &[HdcClassifier]) -> Result<TestBench> {
        TestBench::new(ensemble, &self.test.images)
    }

    /// Retrains `ensemble` in place on the records of `run`.
    pub fn retrain(
        &self,
        ensemble: &mut [HdcClassifier],
        run: &DifftestRun,
        mode: RetrainMode,
        bench: &TestBench,
        on_epoch: impl FnMut(&EpochMetrics),
    ) -> Result<RetrainOutcome> {
        let records = &run.report.records;
        let epochs = self.config.epochs;
        match mode {
            RetrainMode::Static => static_retrain_with(ensemble, records, epochs, bench, on_epoch),
            RetrainMode::Dynamic => {
                let pool_images: Vec<Image>;
                let refresh = match self.config.refresh_scope {
                    RefreshScope::Dis => Refresh::Records,
                    RefreshScope::Validation => {
                        pool_images = self.validation.images.clone();
                        Refresh::Pool(&pool_images)
                    }
                };
                dynamic_retrain_with(ensemble, records, epochs, bench, refresh, on_epoch)
            }
        }
    }

    /// Test images on which every member of `ensemble` agrees.
    pub fn agreed_test_images<C: BlackboxClassifier>(&self, ensemble: &[C]) -> Result<Vec<Image>> {
        Ok(discrepancies(ensemble, &self.test.images)?.1)
    }

    /// Counts difference-inducing perturbations of `agreed` for the baseline
    /// and every named model set.
    pub fn robustness(
        &self,
        agreed: &[Image],
        baseline: &[HdcClassifier],
        sets: &[(String, Vec<HdcClassifier>)],
    ) -> Result<RobustnessReport> {
        let seed = self.config.robustness_seed;
        let specs = self.config.perturbations.specs(seed)?;
        let count = |ensemble: &[HdcClassifier]| {
            crate::difftest::measure_robustness(ensemble, agreed, &specs, seed)
        };
        let baseline_count = count(baseline)?;
        let ratio = |n: usize| {
            if baseline_count == 0 {
                if n == 0 { 1.0 } else { f64::INFINITY }
            } else {
                n as f64 / baseline_count as f64
            }
        };
        let entries = sets
            .iter()
            .map(|(name, ensemble)| {
                let n = count(ensemble)?;
                Ok(RobustnessEntry {
                    name: name.clone(),
                    discrepancy_count: n,
                    ratio_to_baseline: ratio(n),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RobustnessReport {
            agreed_test_count: agreed.len(),
            perturbation_seed: seed,
            baseline: baseline_count,
            sets: entries,
        })
    }
}

fn progress(msg: impl AsRef<str>) {
    eprintln!("[hdcdiff] {}", msg.as_ref());
}

/// Trains one model per seed, saves them and writes `train_report.json`.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainReport> {
    let exp = Experiment::load(config.clone())?;
    train_and_save(&exp)
}

/// Trains the ensemble of `exp`, saves the models and the report.
pub fn train_and_save(exp: &Experiment) -> Result<TrainReport> {
    let start = Instant::now();
    let ensemble = exp.train_ensemble()?;
    let report = exp.train_report(exp.test_accuracies(&ensemble)?);
    save_models(&exp.config.models_dir(), &ensemble)?;
    write_json(&exp.config.output_dir.join("train_report.json"), &report)?;
    for acc in &report.accuracy {
        progress(format!("seed {}: test accuracy {:.4}", acc.seed, acc.accuracy));
    }
    progress(format!("trained {} models in {:.1}s", ensemble.len(), start.elapsed().as_secs_f64()));
    Ok(report)
}

/// Runs the search with the saved baseline models and writes the manifest
/// and perturbed images.
pub fn cmd_difftest(config: &ExperimentConfig) -> Result<DifftestRun> {
    let exp = Experiment::load(config.clone())?;
    difftest_and_save(&exp, &load_models(&config.models_dir(), &config.seeds)?)
}

pub fn difftest_and_save(exp: &Experiment, ensemble: &[HdcClassifier]) -> Result<DifftestRun> {
    let run = exp.difftest(ensemble, exp.config.perturbation)?;
    let dir = exp.config.output_dir.join("difftest");
    write_json(&dir.join("manifest.json"), &exp.difftest_manifest(&run, exp.config.perturbation))?;
    export_perturbed_pgms(&dir.join("images"), &run.report)?;
    progress(format!(
        "{} difference-inducing inputs ({} original, {} generated) in {:.1}s, {:.1}/s",
        run.report.discrepancy_count,
        run.original_count(),
        run.report.generated_count,
        run.report.elapsed.as_secs_f64(),
        run.report.throughput()
    ));
    Ok(run)
}

/// Reruns the search inline, retrains the baseline models and writes the
/// metrics CSV, summary and retrained models.
pub fn cmd_retrain(config: &ExperimentConfig) -> Result<RetrainOutcome> {
    let exp = Experiment::load(config.clone())?;
    let baseline = load_models(&config.models_dir(), &config.seeds)?;
    let run = exp.difftest(&baseline, config.perturbation)?;
    retrain_and_save(&exp, baseline, &run).map(|(outcome, _)| outcome)
}

/// Retrains `ensemble` and returns the metrics and the retrained models.
pub fn retrain_and_save(
    exp: &Experiment,
    mut ensemble: Vec<HdcClassifier>,
    run: &DifftestRun,
) -> Result<(RetrainOutcome, Vec<HdcClassifier>)> {
    let config = &exp.config;
    let bench = exp.test_bench(&ensemble)?;
    let name = config.retrain_run_name();
    let outcome = exp.retrain(&mut ensemble, run, config.mode, &bench, |m| {
        progress(format!("{name} {}", metrics_row(m)));
    })?;
    let dir = config.retrain_dir();
    write_atomic(&dir.join("metrics.csv"), metrics_csv(&config.seeds, outcome.rows()).as_bytes())?;
    write_json(
        &dir.join("summary.json"),
        &RetrainSummary {
            run: name,
            mode: config.mode,
            perturbation: config.perturbation,
            refresh_scope: config.refresh_scope,
            epochs: config.epochs,
            record_count: run.report.discrepancy_count,
            initial: outcome.initial.clone(),
            last: outcome.last().clone(),
            peak_mean_accuracy: outcome.peak_mean_accuracy(),
        },
    )?;
    save_models(&dir.join("models"), &ensemble)?;
    Ok((outcome, ensemble))
}

/// Compares the baseline models against every retrained model set found
/// under `<out>/retrain/` (or the given run names).
pub fn cmd_robustness(config: &ExperimentConfig, runs: &[String]) -> Result<RobustnessReport> {
    let exp = Experiment::load(config.clone())?;
    let baseline = load_models(&config.models_dir(), &config.seeds)?;
    let retrain_root = config.output_dir.join("retrain");
    let names: Vec<String> = if runs.is_empty() {
        let mut found: Vec<String> = match fs::read_dir(&retrain_root) {
            Ok(entries) => entries
                .filter_map(|e| e.ok())
                .filter(|e| e.path().join("models").is_dir())
                .filter_map(|e| e.file_name().into_string().ok())
                .collect(),
            Err(_) => Vec::new(),
        };
        found.sort();
        found
    } else {
        runs.to_vec()
    };
    let sets = names
        .into_iter()
        .map(|name| {
            let models = load_models(&retrain_root.join(&name).join("models"), &config.seeds)?;
            Ok((name, models))
        })
        .collect::<Result<Vec<_>>>()?;
    let agreed = exp.agreed_test_images(&baseline)?;
    let report = exp.robustness(&agreed, &baseline, &sets)?;
    write_json(&config.output_dir.join("robustness.json"), &report)?;
    progress(format!("baseline: {} on {} agreed test images", report.baseline, report.agreed_test_count));
    for entry in &report.sets {
        progress(format!("{}: {} (ratio {:.3})", entry.name, entry.discrepancy_count, entry.ratio_to_baseline));
    }
    Ok(report)
}

/// Train, search and retrain in one go.
pub fn cmd_pipeline(config: &ExperimentConfig) -> Result<RetrainOutcome> {
    let exp = Experiment::load(config.clone())?;
    run_pipeline(&exp)
}

pub fn run_pipeline(exp: &Experiment) -> Result<RetrainOutcome> {
    train_and_save(exp)?;
    let baseline = load_models(&exp.config.models_dir(), &exp.config.seeds)?;
    let run = difftest_and_save(exp, &baseline)?;
    retrain_and_save(exp, baseline, &run).map(|(outcome, _)| outcome)
}

/// Runs the pipeline once per validation fraction, each under
/// `<out>/sweep/fraction_<f>/`, and concatenates the metrics into
/// `<out>/sweep.csv` with a leading `fraction` column.
pub fn cmd_sweep(config: &ExperimentConfig, fractions: &[f64]) -> Result<BTreeMap<String, RetrainOutcome>> {
    if fractions.is_empty() {
        return Err(HdcError::config("no split fractions given"));
    }
    let base = Experiment::load(config.clone())?;
    let mut csv = format!("fraction,{}\n", metrics_header(&config.seeds));
    let mut outcomes = BTreeMap::new();
    for &fraction in fractions {
        let key = format!("{fraction:.2}");
        let mut sub = config.clone();
        sub.validation_fraction = fraction;
        sub.output_dir = config.output_dir.join("sweep").join(format!("fraction_{key}"));
        let exp = base.with_config(sub)?;
        progress(format!("split fraction {key}: {} train / {} validation", exp.train.len(), exp.validation.len()));
        let outcome = run_pipeline(&exp)?;
        for row in outcome.rows() {
            csv.push_str(&format!("{key},{}\n", metrics_row(row)));
        }
        outcomes.insert(key, outcome);
    }
    write_atomic(&config.output_dir.join("sweep.csv"), csv.as_bytes())?;
    Ok(outcomes)
}
