use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, SeedList, SizeList, WordList};

/// Numerical experiments on random quantum channels built from Haar unitaries.
///
/// Parameters are resolved as flag, then `--config` file, then the default
/// shown in each subcommand's help. Seeds are written `i..j` (inclusive) or
/// `a,b,c`; size lists are written `a,b,c`. MOELAB_THREADS sets the number of
/// worker threads.
#[derive(Debug, Parser)]
#[command(name = "moelab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Haar tuple and print a per-unitary summary
    Sample(SampleArgs),
    /// Operator norm of U_1 + ... + U_k against the free-group value 2 sqrt(k-1)
    Kesten(KestenArgs),
    /// Normalised traces of words in the unitaries against the free trace
    DistCheck(DistCheckArgs),
    /// Empirical triple norm of random coefficient matrices against its free bracket
    Haagerup(HaagerupArgs),
    /// Largest L2 distance of an output from I/k against 3/k
    MainEstimate(MainEstimateArgs),
    /// Minimum output entropy and largest complementary output norm
    Moe(MoeArgs),
    /// Entropy of the Bell-state output of the product channel
    ProductBound(ProductBoundArgs),
    /// Additivity-violation arithmetic from a real channel
    Certificate(CertificateArgs),
    /// Run every experiment with its defaults
    All(AllArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON config file supplying defaults
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Append records to this JSON-lines file; CSV goes to <stem>.<experiment>.csv
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format for --out
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Leave started_at and finished_at empty so output is byte-reproducible
    #[arg(long)]
    pub no_timestamps: bool,
}

#[derive(Debug, Args)]
pub struct SlackArgs {
    /// Relative slack on asymptotic bounds for 256 <= n < 512
    #[arg(long = "slack-256", value_name = "S", default_value_t = 0.15)]
    pub slack_256: f64,
    /// Relative slack on asymptotic bounds for n >= 512
    #[arg(long = "slack-512", value_name = "S", default_value_t = 0.10)]
    pub slack_512: f64,
}

#[derive(Debug, Args)]
pub struct OptArgs {
    /// Random starts per optimisation
    #[arg(long, default_value_t = 32, value_parser = positive)]
    pub starts: usize,
    /// Iteration cap per start
    #[arg(long = "max-iters", default_value_t = 2000, value_parser = positive)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 2, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 64, value_parser = positive)]
    pub n: usize,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KestenArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 2, value_parser = positive)]
    pub k: usize,
    /// Ascending matrix sizes
    #[arg(long, value_name = "LIST", default_value = "64,128,256,512")]
    pub n: SizeList,
    /// Seeds
    #[arg(long, value_name = "SEEDS", default_value = "0..4")]
    pub seeds: SeedList,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DistCheckArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 2, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub n: usize,
    /// Words separated by ';', letters by ','; 'e' is the identity and -i the inverse of u_i
    #[arg(long, value_name = "WORDS", default_value = "e;1,1;1,2,-1,-2;1,-2")]
    pub words: WordList,
    /// Independent tuples averaged per word
    #[arg(long, default_value_t = 50, value_parser = positive)]
    pub samples: usize,
    /// Largest accepted |mean - tau| for n >= 256
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub slack: SlackArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HaagerupArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub n: usize,
    /// Traceless and general coefficient matrices per seed (each)
    #[arg(long, default_value_t = 20, value_parser = positive)]
    pub matrices: usize,
    /// Moment order of the free lower bound
    #[arg(long = "moment-order", default_value_t = 2, value_parser = positive)]
    pub moment_order: usize,
    /// Seeds
    #[arg(long, value_name = "SEEDS", default_value = "0..2")]
    pub seeds: SeedList,
    #[command(flatten)]
    pub slack: SlackArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MainEstimateArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub n: usize,
    /// Seeds
    #[arg(long, value_name = "SEEDS", default_value = "0..2")]
    pub seeds: SeedList,
    #[command(flatten)]
    pub opt: OptArgs,
    #[command(flatten)]
    pub slack: SlackArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MoeArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 8, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub n: usize,
    /// Seeds
    #[arg(long, value_name = "SEEDS", default_value = "0..2")]
    pub seeds: SeedList,
    #[command(flatten)]
    pub opt: OptArgs,
    #[command(flatten)]
    pub slack: SlackArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ProductBoundArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 128, value_parser = positive)]
    pub n: usize,
    /// Seeds
    #[arg(long, value_name = "SEEDS", default_value = "0..4")]
    pub seeds: SeedList,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CertificateArgs {
    /// Number of unitaries
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub k: usize,
    /// Matrix size
    #[arg(long, default_value_t = 128, value_parser = positive)]
    pub n: usize,
    /// Seeds
    #[arg(
        long,
        value_name = "SEEDS",
        default_value = "0..2",
        conflicts_with = "seed"
    )]
    pub seeds: SeedList,
    /// Single seed, shorthand for --seeds S..S
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub opt: OptArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AllArgs {
    #[command(flatten)]
    pub slack: SlackArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}
