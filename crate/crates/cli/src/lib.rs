//! The `freshblend` command line.
//!
//! Exit codes: 0 on success, 1 when an input or configuration fails
//! validation, 2 on usage errors.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use freshblend::BreakExponent;

use config::{Mixture, RunConfig};

/// A comma separated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
            .collect::<Result<_, _>>()
            .map(RealList)
    }
}

#[derive(Debug, Parser)]
#[command(name = "freshblend", version, about = "Recency ranking by diversification")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the matching keys of the config file.
#[derive(Debug, Default, Args)]
struct Flags {
    /// Probability of continuing to the next result.
    #[arg(long, global = true, value_name = "REAL")]
    pbreak: Option<f64>,
    /// Discount exponent: `r` or `r-1`.
    #[arg(long, global = true, value_name = "r|r-1")]
    break_exponent: Option<BreakExponent>,
    /// Result page length.
    #[arg(long, global = true, value_name = "INT")]
    depth: Option<usize>,
    /// Freshness window in days.
    #[arg(long, global = true, value_name = "REAL")]
    window_days: Option<f64>,
    /// Position priors, comma separated.
    #[arg(long, global = true, value_name = "LIST")]
    priors: Option<RealList>,
    /// Recency-need estimates swept by `sweep`, comma separated.
    #[arg(long, global = true, value_name = "LIST")]
    grid: Option<RealList>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Corpus directory; supplies default paths for the per-file inputs.
    #[arg(long, global = true, value_name = "DIR")]
    corpus: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TSV")]
    rankings: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TSV")]
    queries: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TSV")]
    features: Option<PathBuf>,
    #[arg(long, global = true, value_name = "JSON")]
    model: Option<PathBuf>,
    /// Per-query recency-need estimates (`query_id<TAB>p_fresh`).
    #[arg(long, global = true, value_name = "TSV")]
    predictions: Option<PathBuf>,
    /// Blended pages to evaluate instead of the rankings' own order.
    #[arg(long, global = true, value_name = "TSV")]
    page: Option<PathBuf>,
    #[arg(long, global = true, value_name = "TSV")]
    query_log: Option<PathBuf>,
    /// Recency need applied to every query.
    #[arg(long, global = true, value_name = "REAL")]
    p_fresh: Option<f64>,

    /// Queries to generate.
    #[arg(long, global = true, value_name = "INT")]
    n_queries: Option<usize>,
    /// Grade mixture of the generated corpus.
    #[arg(long, global = true, value_enum)]
    mixture: Option<Mixture>,
    /// Simulated queries per A/B bucket.
    #[arg(long, global = true, value_name = "INT")]
    ab_queries: Option<usize>,

    #[arg(long, global = true, value_name = "INT")]
    trees: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    tree_depth: Option<usize>,
    #[arg(long, global = true, value_name = "REAL")]
    learning_rate: Option<f64>,
    #[arg(long, global = true, value_name = "INT")]
    min_leaf: Option<usize>,
    #[arg(long, global = true, value_name = "REAL")]
    subsample: Option<f64>,
}

impl Flags {
    fn apply(self, c: &mut RunConfig) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut c.pbreak, self.pbreak);
        set(&mut c.break_exponent, self.break_exponent);
        set(&mut c.depth, self.depth);
        set(&mut c.window_days, self.window_days);
        set(&mut c.priors, self.priors.map(|l| l.0));
        set(&mut c.grid, self.grid.map(|l| l.0));
        set(&mut c.seed, self.seed);
        set_opt(&mut c.out, self.out);
        set_opt(&mut c.corpus, self.corpus);
        set_opt(&mut c.rankings, self.rankings);
        set_opt(&mut c.queries, self.queries);
        set_opt(&mut c.features, self.features);
        set_opt(&mut c.model, self.model);
        set_opt(&mut c.predictions, self.predictions);
        set_opt(&mut c.page, self.page);
        set_opt(&mut c.query_log, self.query_log);
        set_opt(&mut c.p_fresh, self.p_fresh);
        set(&mut c.n_queries, self.n_queries);
        set(&mut c.mixture, self.mixture);
        set(&mut c.ab_queries, self.ab_queries);
        set(&mut c.trees, self.trees);
        set(&mut c.tree_depth, self.tree_depth);
        set(&mut c.learning_rate, self.learning_rate);
        set(&mut c.min_leaf, self.min_leaf);
        set(&mut c.subsample, self.subsample);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus into --out.
    Generate,
    /// Train the recency classifier on the judged queries of --corpus.
    Train,
    /// Write per-query recency-need predictions for a feature table.
    Predict,
    /// Blend each query's ranking with its fresh documents.
    Blend,
    /// Print ERR-IAA of rankings (or blended pages) under their latent relevances.
    Eval,
    /// Sweep the assumed recency need against each true grade.
    Sweep,
    /// Compare page strategies per bucket of recency need.
    Buckets,
    /// Simulate an A/B test of learned blending against the ordinary ranking.
    Abtest,
    /// Per-query daily volume shares from a query log.
    Profile,
}

/// A malformed invocation, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Runs the command line in `argv` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut config = RunConfig::from_env()?;
    cli.flags.apply(&mut config);
    commands::dispatch(cli.command, &config)
}
