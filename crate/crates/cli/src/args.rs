use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kmax_core::Scenario;

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "kmax", version, about = "Max-type kernel K-sample tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one test on a CSV file or a simulated scenario.
    Test(TestArgs),
    /// Power of the max-type and average-type tests on the sparse alternatives.
    Power(PowerArgs),
    /// Mean Bobkov and McDiarmid p-value bounds on truncated normals.
    Bounds(BoundsArgs),
    /// Null tail of the chi-square-kernel statistic against its weighted chi-square limit.
    Tailratio(TailRatioArgs),
    /// Asymptotic Gumbel p-value of a max statistic, or its simulated level.
    Gumbel(GumbelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    Max,
    Weighted,
    Disco,
    Ecf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Energy,
    Linear,
    Chisquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Perm,
    Mc,
    Bobkov,
    Mcdiarmid,
    Gumbel,
    Phi2,
    #[value(name = "phiK")]
    PhiK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundsKernelArg {
    Energy,
    Linear,
}

/// Unset options fall back to `--config`, then to built-in defaults.
#[derive(Debug, Args)]
pub struct TestArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV file with a `group` column.
    #[arg(long, conflicts_with = "scenario")]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<Scenario>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_enum)]
    pub statistic: Option<StatisticArg>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// `median` or a positive number.
    #[arg(long, allow_hyphen_values = true)]
    pub bandwidth: Option<String>,
    /// Chi-square level probabilities, comma separated; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[arg(long = "bound-B")]
    pub bound_b: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Eigenvalue file for the Gumbel method.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Use the maximal-eigenvalue variance proxy for phiK.
    #[arg(long)]
    pub max_tilde: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Scenarios to run, comma separated; all four alternatives by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_scenario)]
    pub scenario: Vec<Scenario>,
    #[arg(long = "K", value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Methods among max_gau, max_eng, disco, ecf.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Full grid: K up to 100, 800 replicates.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum, default_value = "energy")]
    pub kernel: BoundsKernelArg,
    /// Kernel bound for McDiarmid; 10 for energy, 100 for linear by default.
    #[arg(long = "bound-B")]
    pub bound_b: Option<f64>,
    /// Total sample sizes, comma separated; 100,200,...,1000 by default.
    #[arg(long = "N", value_delimiter = ',')]
    pub n_total: Vec<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TailRatioArgs {
    /// Number of levels.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Per-group sample size.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Draws for the reference tail.
    #[arg(long, default_value_t = 1_000_000)]
    pub nsim: u64,
    /// Chi-square quantile levels at which the tails are compared.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,0.9,0.95")]
    pub probs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GumbelArgs {
    /// Eigenvalue file, one value per line.
    #[arg(long, conflicts_with = "probs")]
    pub spectrum: Option<PathBuf>,
    /// Chi-square kernel probabilities in place of a spectrum file.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    /// Observed statistic as reported by `kmax test`.
    #[arg(long, required_unless_present = "simulate")]
    pub value: Option<f64>,
    /// The value is the weighted statistic.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long = "K")]
    pub k: usize,
    /// Per-group sample size.
    #[arg(long)]
    pub n: usize,
    /// Simulate the null rejection rate of the chi-square kernel test with
    /// this many equiprobable levels instead.
    #[arg(long, conflicts_with_all = ["value", "spectrum", "probs"])]
    pub simulate: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: kmax_core::Error| e.to_string())
}
