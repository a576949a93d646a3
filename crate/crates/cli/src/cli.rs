//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "orbitlet",
    version,
    about = "Continuous wavelet transforms on dilation groups"
)]
pub struct Cli {
    /// Pipeline configuration; other commands take defaults from it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report.json and CSV side outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for random probe and signal draws.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the stabilizer of a frequency.
    Classify(ClassifyArgs),
    /// Describe the transversal, κ and the quotient measure.
    Atlas(GroupArgs),
    /// Build an admissible (or weakly admissible) wavelet.
    MakeWavelet(MakeWaveletArgs),
    /// Check admissibility of a wavelet on a probe grid.
    Check(CheckArgs),
    /// Wavelet coefficients of a signal file.
    Analyze(TransformArgs),
    /// Reconstruct a signal from a coefficient file.
    Synthesize(TransformArgs),
    /// Plancherel-side checks.
    Plancherel(PlancherelArgs),
    /// Run the invariant batteries.
    Verify(VerifyArgs),
    /// Run the full pipeline described by a configuration file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    /// Catalog id, or a custom chart as a JSON file or inline JSON.
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// Frequency as comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Relative ε schedule for the probe classifier.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilons: Option<String>,
}

#[derive(Debug, Args)]
pub struct MakeWaveletArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// `all`, or a region as a JSON file or inline JSON.
    #[arg(long)]
    pub region: Option<String>,
    /// Chart coordinates of the contraction for the tiling construction.
    #[arg(long, allow_hyphen_values = true)]
    pub h0: Option<String>,
    /// Build the weakly admissible fallback instead.
    #[arg(long)]
    pub weak: bool,
    /// Write the profile here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// `shannon`, or a profile as a JSON file or inline JSON.
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub region: Option<String>,
    /// Orbit representatives in the probe grid.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Extra points per orbit.
    #[arg(long)]
    pub duplicates: Option<usize>,
    /// Explicit probe frequency; repeatable. Replaces the generated grid.
    #[arg(long = "at", allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Accept a weakly admissible verdict.
    #[arg(long)]
    pub weak: bool,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// Defaults to the wavelet recorded in the coefficient file.
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Nodes per continuous unbounded block.
    #[arg(long)]
    pub hnodes: Option<usize>,
    /// `lo:hi` range for unbounded blocks.
    #[arg(long, allow_hyphen_values = true)]
    pub hrange: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlancherelCheck {
    QuasiInvariance,
    Scaling,
    Density,
}

#[derive(Debug, Args)]
pub struct PlancherelArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[arg(long)]
    pub check: PlancherelCheck,
    /// Scaling factor; repeatable. Defaults to 1/2, 2 and 3.
    #[arg(long)]
    pub a: Vec<f64>,
    /// Candidate density as JSON; defaults to the canonical measure.
    #[arg(long)]
    pub candidate: Option<String>,
    /// Admissible wavelet for the density check.
    #[arg(long)]
    pub wavelet: Option<String>,
    /// Region for the scaling and density checks.
    #[arg(long)]
    pub region: Option<String>,
    /// Random samples for the quasi-invariance check.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated catalog ids, or `all`.
    #[arg(long, default_value = "all")]
    pub groups: String,
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Configuration file; overrides the global `--config`.
    pub config: Option<PathBuf>,
}
