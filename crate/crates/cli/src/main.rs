//! `nirsc`: one subcommand per pipeline stage, files in and files out.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nirsc::eval::{Augmentation, Preprocessing};
use nirsc::explain::ShapleyMode;

use crate::config::{ExperimentConfig, ModelKind};
use crate::output::Outputs;

#[derive(Debug, Parser)]
#[command(
    name = "nirsc",
    version,
    about = "Near-infrared skin-lesion spectra: preprocessing, balancing, boosted trees and evaluation"
)]
struct Cli {
    /// Worker threads for folds, trials and attributions (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labelled dataset.
    Synth(SynthArgs),
    /// Stratified train/test split, optionally with a cross-validation fold plan.
    Split(SplitArgs),
    /// SNV-normalize every spectrum.
    Preprocess(PreprocessArgs),
    /// Windowed statistical features as a named-column CSV.
    Features(FeaturesArgs),
    /// Balance the classes with SMOTE or a GAN.
    Augment(AugmentArgs),
    /// Stratified k-fold cross-validation of one experiment arm.
    Cv(ExperimentArgs),
    /// Hyperparameter search scored by cross-validation.
    Tune(TuneArgs),
    /// Fit the full pipeline on the training set.
    Train(TrainArgs),
    /// Score a dataset with a trained pipeline.
    Predict(PredictArgs),
    /// Shapley attributions and a global feature ranking.
    Explain(ExplainArgs),
    /// Assemble result tables from cross-validation or test reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SynthSpec JSON; defaults to the reference class counts.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Dataset CSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the effective SynthSpec JSON here.
    #[arg(long)]
    pub save_spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail when a lesion stratum has no sample on one side.
    #[arg(long)]
    pub require_nonempty_strata: bool,
    /// Also write a k-fold plan for the training part.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub fold_seed: u64,
    /// Directory for train.csv, test.csv and folds.json.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub window_count: usize,
    #[arg(long, default_value_t = 0.0)]
    pub overlap_fraction: f64,
    /// Named feature subset: all, moments, location, amplitude or mean_std.
    #[arg(long, default_value = "all")]
    pub feature_mask: String,
    /// SNV-normalize before extracting.
    #[arg(long)]
    pub snv: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BalanceMethod {
    Smote,
    Gan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighborSpace {
    Raw,
    Snv,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: BalanceMethod,
    /// Space in which SMOTE finds neighbours.
    #[arg(long, value_enum, default_value = "raw")]
    pub smote_space: NeighborSpace,
    #[arg(long, default_value_t = 5)]
    pub k_neighbors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub gan_epochs: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    /// Generator parameters JSON (GAN only).
    #[arg(long)]
    pub generator: Option<PathBuf>,
    /// Per-epoch loss CSV (GAN only).
    #[arg(long)]
    pub training_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment JSON; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(Preprocessing))]
    pub preprocessing: Option<Preprocessing>,
    #[arg(long, value_parser = clap::value_parser!(Augmentation))]
    pub augmentation: Option<Augmentation>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub window_count: Option<usize>,
    #[arg(long)]
    pub overlap_fraction: Option<f64>,
    #[arg(long)]
    pub feature_mask: Option<String>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub n_components: Option<usize>,
    #[arg(long)]
    pub gan_epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fold_seed: Option<u64>,
    #[arg(long)]
    pub smote_seed: Option<u64>,
    #[arg(long)]
    pub gan_seed: Option<u64>,
    #[arg(long)]
    pub model_seed: Option<u64>,
    #[arg(long)]
    pub tuner_seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// best.json from `tune`; its point is applied on top of the config.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Held-out set scored once after fitting.
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Predictions CSV (id, score, label).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exhaustive,
    MonteCarlo,
}

impl From<ModeArg> for ShapleyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ShapleyMode::Auto,
            ModeArg::Exhaustive => ShapleyMode::Exhaustive,
            ModeArg::MonteCarlo => ShapleyMode::MonteCarlo,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training set the background rows are drawn from.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Samples to explain.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub permutations: usize,
    #[arg(long, default_value_t = 100)]
    pub background_size: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json from `cv` or test.json from `train`, one table row each.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

impl ExperimentArgs {
    /// Config file (or defaults) with the flags applied over it.
    pub fn resolve(&self) -> nirsc::Result<ExperimentConfig> {
        let mut c = ExperimentConfig::load(self.config.as_deref())?;
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag {
                    c.$($field).+ = v.clone().into();
                })*
            };
        }
        set!(
            dataset => dataset,
            preprocessing => preprocessing,
            augmentation => augmentation,
            model => model,
            folds => folds,
            window_count => windows.window_count,
            overlap_fraction => windows.overlap_fraction,
            n_trees => gbdt.n_trees,
            learning_rate => gbdt.learning_rate,
            max_depth => gbdt.max_depth,
            n_components => plsda.n_components,
            gan_epochs => gan.epochs,
            seed => seed,
            fold_seed => fold_seed,
            smote_seed => smote_seed,
            gan_seed => gan_seed,
            model_seed => model_seed,
            tuner_seed => tuner_seed,
            output => output,
        );
        if let Some(mask) = &self.feature_mask {
            c.windows.feature_mask = nirsc::features::FeatureMask::preset(mask)?;
        }
        Ok(c)
    }
}

fn dispatch(command: &Command, out: &mut Outputs) -> nirsc::Result<()> {
    match command {
        Command::Synth(a) => commands::synth(a, out),
        Command::Split(a) => commands::split(a, out),
        Command::Preprocess(a) => commands::preprocess(a, out),
        Command::Features(a) => commands::features(a, out),
        Command::Augment(a) => commands::augment(a, out),
        Command::Cv(a) => commands::cv(a, out),
        Command::Tune(a) => commands::tune(a, out),
        Command::Train(a) => commands::train(a, out),
        Command::Predict(a) => commands::predict(a, out),
        Command::Explain(a) => commands::explain(a, out),
        Command::Report(a) => commands::report(a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: InvalidConfig: --jobs must be at least 1");
            return ExitCode::FAILURE;
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    let mut out = Outputs::default();
    match dispatch(&cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            out.discard();
            eprintln!("error: {}: {e}", e.kind_name());
            ExitCode::FAILURE
        }
    }
}
