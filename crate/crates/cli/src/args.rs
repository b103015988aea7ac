use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "syracuse", version, about = "Workbench for the real extension of the 3x+1 map")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalOpts {
    /// Initial working precision in bits.
    #[arg(long, global = true, default_value_t = 128)]
    pub start_bits: u32,
    /// Precision ceiling in bits.
    #[arg(long, global = true, default_value_t = 32768)]
    pub max_bits: u32,
    /// Leading digits two precision levels must share.
    #[arg(long, global = true, default_value_t = 20)]
    pub agreement_digits: u32,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Print an integer or real trajectory.
    Orbit(OrbitArgs),
    /// Flight-time statistics over a range of integers.
    Flight(FlightArgs),
    /// Export the inverse tree of 1.
    Tree(TreeArgs),
    /// Certified critical points as CSV.
    Critical(CriticalArgs),
    /// Resumable basin scan of critical points.
    Scan(ScanArgs),
    /// Run the interval verification suites.
    Verify(VerifyArgs),
    /// Discrepancy, growth constant and growth experiments.
    Stats(StatsArgs),
    /// Multipliers of the attracting cycles.
    Table1(Table1Args),
    /// Compare scan outcomes with the reference lists.
    Paperlists(ListsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OrbitArgs {
    /// Integer or decimal starting point.
    #[arg(long, allow_hyphen_values = true)]
    pub start: String,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Iterate the real map even for an integer start.
    #[arg(long)]
    pub real: bool,
    /// Significant digits printed for real orbits.
    #[arg(long, default_value_t = 20)]
    pub digits: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FlightArgs {
    #[arg(long, default_value_t = 1)]
    pub from: u64,
    /// Exclusive upper end.
    #[arg(long)]
    pub to: u64,
    #[arg(long, default_value_t = 100_000)]
    pub cap: u64,
    /// Per-n rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also verify that every n up to this bound reaches 1.
    #[arg(long)]
    pub range_verify: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeFormat {
    Json,
    Dot,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TreeArgs {
    #[arg(long)]
    pub depth: u32,
    #[arg(long, value_enum, default_value_t = TreeFormat::Dot)]
    pub format: TreeFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CriticalArgs {
    /// Explicit indices, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub n: Vec<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<i64>,
    /// Inclusive upper end.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<i64>,
    /// Significant digits of the printed midpoints.
    #[arg(long, default_value_t = 30)]
    pub digits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanSide {
    Positive,
    Negative,
}

impl ScanSide {
    pub fn name(self) -> &'static str {
        match self {
            ScanSide::Positive => "positive",
            ScanSide::Negative => "negative",
        }
    }

    /// Signed indices for magnitudes `from..=to`.
    pub fn indices(self, from: i64, to: i64) -> Vec<i64> {
        match self {
            ScanSide::Positive => (from..=to).collect(),
            ScanSide::Negative => (from..=to).map(|m| -m).collect(),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value_t = ScanSide::Positive)]
    pub side: ScanSide,
    /// Smallest |n| scanned.
    #[arg(long, default_value_t = 1)]
    pub from: i64,
    /// Largest |n| scanned.
    #[arg(long)]
    pub to: i64,
    /// JSONL cache; defaults to `scan-<side>.jsonl` in `$SYRACUSE_CACHE_DIR`
    /// or the working directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Discard a cache written with a different configuration.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: u64,
    #[arg(long, default_value_t = 1e30)]
    pub max_magnitude: f64,
    /// Summary JSON destination; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Brackets,
    Inclusions,
    Invariant,
    Images,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Largest n for the bracket and inclusion sweeps.
    #[arg(long, default_value_t = 10_000)]
    pub n_max: i64,
    /// Width parameter of the interval family, as a fraction.
    #[arg(long, default_value = "7/2")]
    pub a: String,
    /// Exit nonzero unless every certificate is certified.
    #[arg(long)]
    pub strict: bool,
    /// All certificates as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StatsArgs {
    #[command(subcommand)]
    pub mode: StatsMode,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum StatsMode {
    /// Geometric mean of 1 - cos(pi x)/2 by closed form and quadrature.
    Tau {
        #[arg(long, default_value_t = 128)]
        bits: u32,
    },
    /// Partial Crandall product.
    Crandall {
        #[arg(long, default_value_t = 30)]
        k: u32,
    },
    /// Star discrepancy of numbers read from a file, one per line.
    Discrepancy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        b: f64,
    },
    /// Schwarzian derivative of f at a point.
    Schwarzian {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Growth rates and discrepancies of random orbit segments.
    Growth {
        #[arg(long, allow_hyphen_values = true)]
        x_lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        x_hi: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Round starts to integers.
        #[arg(long)]
        integer: bool,
        /// Discrepancy below which a segment counts as equidistributed.
        #[arg(long, default_value_t = 0.05)]
        ud_threshold: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Table1Args {
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ListsArgs {
    #[arg(long, value_enum, default_value_t = ScanSide::Positive)]
    pub side: ScanSide,
    /// Largest |n| compared.
    #[arg(long, default_value_t = 2000)]
    pub max: i64,
    /// Reuse or fill a scan cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
    /// Exit nonzero on any attractor mismatch.
    #[arg(long)]
    pub strict: bool,
}
