use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hdcdiff::dataset::DATA_DIR_ENV;
use hdcdiff::experiment::{
    cmd_difftest, cmd_pipeline, cmd_retrain, cmd_robustness, cmd_sweep, cmd_train, ExperimentConfig,
    PerturbationSettings, DEFAULT_PERTURBATION_SEED, DEFAULT_ROBUSTNESS_SEED,
};
use hdcdiff::retrain::{RefreshScope, RetrainMode};

#[derive(Parser, Debug)]
#[command(name = "hdcdiff", version, about = "Differential testing and retraining of HDC classifiers on MNIST")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one classifier per seed and report baseline test accuracy.
    Train(Common),
    /// Find difference-inducing inputs on the validation split.
    Difftest(Common),
    /// Retrain the saved baseline models on difference-inducing inputs.
    Retrain(Common),
    /// Compare the baseline against retrained model sets.
    Robustness {
        #[command(flatten)]
        common: Common,
        /// Retrain run names under <out>/retrain (default: all found).
        #[arg(long, value_delimiter = ',')]
        runs: Vec<String>,
    },
    /// Train, search and retrain in one go.
    Pipeline(Common),
    /// Run the pipeline for several validation fractions.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.6")]
        splits: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Static,
    Dynamic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scope {
    Dis,
    Validation,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_delimiter = ',', default_value = "30,40,50")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 10_000)]
    dimension: usize,
    #[arg(long, default_value_t = 0.5)]
    validation_fraction: f64,
    /// Shuffle before splitting (default: validation is the tail of the file).
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, value_enum, default_value = "dynamic")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "on")]
    perturbation: Switch,
    #[arg(long, value_enum, default_value = "dis")]
    refresh_scope: Scope,
    #[arg(long, default_value_t = DEFAULT_PERTURBATION_SEED)]
    perturbation_seed: u64,
    #[arg(long, default_value_t = DEFAULT_ROBUSTNESS_SEED)]
    robustness_seed: u64,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_SKEW_MEAN)]
    skew_mean: f64,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_SKEW_STD)]
    skew_std: f64,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_NOISE_POINTS)]
    noise_points: usize,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_BRIGHTNESS)]
    brightness: f64,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_ELASTIC_ALPHA)]
    elastic_alpha: f64,
    #[arg(long, default_value_t = hdcdiff::perturb::DEFAULT_ELASTIC_SIGMA)]
    elastic_sigma: f64,
    #[arg(long, env = DATA_DIR_ENV, default_value = "data/mnist")]
    data_dir: PathBuf,
    #[arg(long, default_value = "runs/default")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seeds: self.seeds.clone(),
            dimension: self.dimension,
            validation_fraction: self.validation_fraction,
            split_seed: self.split_seed,
            epochs: self.epochs,
            mode: match self.mode {
                Mode::Static => RetrainMode::Static,
                Mode::Dynamic => RetrainMode::Dynamic,
            },
            perturbation: matches!(self.perturbation, Switch::On),
            perturbation_seed: self.perturbation_seed,
            robustness_seed: self.robustness_seed,
            perturbations: PerturbationSettings {
                skew_mean: self.skew_mean,
                skew_std: self.skew_std,
                noise_points: self.noise_points,
                brightness: self.brightness,
                elastic_alpha: self.elastic_alpha,
                elastic_sigma: self.elastic_sigma,
            },
            refresh_scope: match self.refresh_scope {
                Scope::Dis => RefreshScope::Dis,
                Scope::Validation => RefreshScope::Validation,
            },
            data_dir: self.data_dir.clone(),
            output_dir: self.out.clone(),
        }
    }
}

fn run(cli: Cli) -> hdcdiff::Result<()> {
    match cli.command {
        Command::Train(c) => cmd_train(&c.config()).map(drop),
        Command::Difftest(c) => cmd_difftest(&c.config()).map(drop),
        Command::Retrain(c) => cmd_retrain(&c.config()).map(drop),
        Command::Robustness { common, runs } => cmd_robustness(&common.config(), &runs).map(drop),
        Command::Pipeline(c) => cmd_pipeline(&c.config()).map(drop),
        Command::Sweep { common, splits } => cmd_sweep(&common.config(), &splits).map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
