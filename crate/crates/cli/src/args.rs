use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "segcons", version, about = "Semi-supervised segmentation with teacher-student consistency")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/test dataset.
    Synth(SynthArgs),
    /// Train on a dataset directory and evaluate on its test split.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint on the test split of a dataset.
    Eval(EvalArgs),
    /// Run the six-row component study.
    Ablate(AblateArgs),
    /// Sweep the consistency balance weight or the labeled fraction.
    Sweep(SweepArgs),
    /// Convert a mask to a signed distance map, or back with --invert.
    Sdf(SdfArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Ellipse,
    TwoLobe,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Training cases.
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Held-out test cases.
    #[arg(long, default_value_t = 20)]
    pub test_cases: usize,
    /// Side length of the square images.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Shape family of the foreground objects.
    #[arg(long, value_enum, default_value_t = Family::Ellipse)]
    pub family: Family,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Write into an existing directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Network {
    Student,
    Teacher,
}

/// Training settings shared by train, ablate and sweep. Every flag overrides
/// the configuration file, which overrides the built-in defaults.
#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    /// JSON training configuration or a previous run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the reduced workstation schedule (2000 steps, decay every 800).
    #[arg(long)]
    pub desk: bool,
    /// Fraction of training cases that keep their labels.
    #[arg(long)]
    pub labeled_fraction: Option<f64>,
    /// Training steps; the decay interval scales with it.
    #[arg(long)]
    pub iters: Option<u64>,
    /// Steepness of the inverse distance transform in the cross-task term.
    #[arg(long)]
    pub k: Option<f64>,
    /// EMA decay of the teacher.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo dropout passes of the teacher.
    #[arg(long)]
    pub mc_passes: Option<usize>,
    /// Square patch side length.
    #[arg(long)]
    pub patch: Option<usize>,
    /// Standard deviation of independent noise on teacher inputs.
    #[arg(long)]
    pub teacher_noise: Option<f64>,
    #[arg(long, value_enum)]
    pub eval_network: Option<Network>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the run artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for initialization, the labeled split and batch sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Loss terms to disable: any of dis, itc, ctc, mask.
    #[arg(long, value_delimiter = ',')]
    pub ablate: Vec<String>,
    /// Balance between the segmentation and distance consistency terms.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Continue from the checkpoint in --out.
    #[arg(long)]
    pub resume: bool,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory holding the checkpoint.
    #[arg(long)]
    pub run: PathBuf,
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the report.
    #[arg(long)]
    pub out: PathBuf,
    /// Network to evaluate; defaults to the one recorded in the checkpoint.
    #[arg(long, value_enum)]
    pub network: Option<Network>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for the grid tables and plot.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train grid rows concurrently.
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("grid").required(true).args(["beta_grid", "fraction_grid"])))]
pub struct SweepArgs {
    /// Sweep the balance weight over 0, 0.25, 0.5, 0.75, 1.
    #[arg(long = "beta", id = "beta_grid")]
    pub beta_grid: bool,
    /// Sweep the labeled fraction over 0.05 to 0.5.
    #[arg(long = "fraction", id = "fraction_grid")]
    pub fraction_grid: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct SdfArgs {
    /// Volume header to read (`.json`).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Volume header to write; the payload goes beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Read a distance map and write the mask recovered by the smooth inverse.
    #[arg(long)]
    pub invert: bool,
    /// Steepness of the inverse transform.
    #[arg(long, default_value_t = 1500.0)]
    pub k: f64,
    /// Scale the distance map to [-1, 1].
    #[arg(long)]
    pub normalize: bool,
}
