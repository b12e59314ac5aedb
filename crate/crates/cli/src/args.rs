use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Digital sequences over F2: points, t-value tables and RQMC pricing runs.
#[derive(Debug, Clone, Parser)]
#[command(name = "lds", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Dump the first 2^m points of a generator.
    Gen(GenArgs),
    /// Frequencies of the t-values of all 2D projections.
    Tvalue(TvalueArgs),
    /// Randomized QMC (or MC) estimates of an option price.
    Price(PriceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Comma-separated generators: niederreiter-nut, sobol-joekuo08,
    /// sobol-joekuo03, sobol-file:<name>, and for `price` also mc.
    #[arg(long, value_delimiter = ',', default_value = "niederreiter-nut")]
    pub generator: Vec<String>,

    /// Direction-number file, either a bare path or `<generator>=<path>`.
    /// Repeatable.
    #[arg(long = "file", value_name = "[GEN=]PATH")]
    pub files: Vec<String>,

    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MGrid {
    /// Comma-separated exponents m.
    #[arg(long, value_delimiter = ',', conflicts_with = "m_range")]
    pub m: Vec<u32>,

    /// Inclusive range `LO..HI` with optional step, e.g. `10..20:2`.
    #[arg(long)]
    pub m_range: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,

    /// Number of dimensions.
    #[arg(long)]
    pub dim: usize,

    /// Emit 2^m points.
    #[arg(long)]
    pub m: u32,

    /// Randomize with a linear scramble and digital shift drawn from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TvalueArgs {
    #[command(flatten)]
    pub common: Common,

    /// Largest dimension s_max; all pairs 1 <= i < s <= s_max are scanned.
    #[arg(long, default_value_t = 360)]
    pub dim: usize,

    #[command(flatten)]
    pub grid: MGrid,

    /// Write every `i,s,t` instead of the histogram (one generator and m only).
    #[arg(long)]
    pub pairs: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub common: Common,

    /// asian, digital, basket or heston-asian.
    #[arg(long)]
    pub product: String,

    /// standard, bb or pca.
    #[arg(long, default_value = "standard")]
    pub construction: String,

    #[command(flatten)]
    pub grid: MGrid,

    /// Number of randomizations M.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write 0 in the seconds column so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,

    /// `key = value` file of product parameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub params: ParamFlags,
}

/// Product parameters. Each applies only to the products that have it.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    /// Time steps, or assets for the basket.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub spot: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
}
