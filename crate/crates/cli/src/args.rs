use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "obliv-relay", version, about = "Rate regions, condition checks and simulations for primitive relay networks with an oblivious relay")]
pub struct Cli {
    /// Worker threads; falls back to OBLIV_RELAY_THREADS. Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the run manifest (stderr when absent).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the GCF region of one topology.
    Region(RegionArgs),
    /// Evaluate several schemes on one PMARC policy and compare them.
    Compare(CompareArgs),
    /// Search the policy space for the best weighted sum rate.
    Frontier(FrontierArgs),
    /// Strong-interference condition checks.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Monte Carlo GCF simulation.
    Simulate(SimulateArgs),
    /// Empirical memorylessness check of randomized encoding.
    Lemma1(Lemma1Args),
    /// Write a built-in channel fixture as a channel document.
    Fixture(FixtureArgs),
    /// Write a uniform policy for a channel.
    PolicyUniform(PolicyUniformArgs),
    /// Re-run a manifest and compare output checksums.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Topology {
    Pmarc,
    Marc,
    Pifrc,
    Multicast,
}

#[derive(Debug, Args)]
pub struct Inputs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
}

#[derive(Debug, Args)]
pub struct Outputs {
    /// JSON output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Additional CSV output for external plotting.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(value_enum)]
    pub topology: Topology,
    #[command(flatten)]
    pub inputs: Inputs,
    /// PIFRC only: run the DMC strong-interference search at this grid
    /// resolution and attach its verdict to the region label.
    #[arg(long)]
    pub si_resolution: Option<usize>,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_delimiter = ',', default_value = "gcf,cf,nnc")]
    pub schemes: Vec<String>,
    /// Tolerance on effective bounds for the verdicts.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// pmarc | marc | pifrc | multicast | cf | nnc
    #[arg(long)]
    pub kind: String,
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub q_size: usize,
    /// One |Ŷ| per destination; defaults to |Y_R| for each.
    #[arg(long, value_delimiter = ',')]
    pub compression_sizes: Option<Vec<usize>>,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Grid and random search over product inputs of a two-pair DMC.
    SiDmc(SiDmcArgs),
    /// Closed-form check on Gaussian channel gains.
    SiGaussian(SiGaussianArgs),
}

#[derive(Debug, Args)]
pub struct SiDmcArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct SiGaussianArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h11: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h12: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h21: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h22: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h1r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h2r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p2: f64,
    /// Equal powers at which both sides are also tabulated.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rates: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rhat: Vec<f64>,
    #[arg(long, default_value_t = obliv_relay::sim::DEFAULT_EPSILON)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// joint | conditional
    #[arg(long, default_value = "joint")]
    pub typicality: String,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct Lemma1Args {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Codebook rate in bits per use.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    pub name: String,
    /// Fixture parameter as key=value; repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolicyUniformArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub q_size: usize,
    #[arg(long, value_delimiter = ',')]
    pub compression_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(value_name = "MANIFEST")]
    pub recorded: PathBuf,
}
