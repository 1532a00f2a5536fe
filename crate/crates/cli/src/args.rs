use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fairrank::experiments::ExportFormat;
use fairrank::WeightKind;

#[derive(Debug, Parser)]
#[command(
    name = "fairrank",
    version,
    about = "Approximately fair ranking under uncertain merit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate (or compute exactly) the top-k probability matrix q.
    Topk(TopkArgs),
    /// Solve the phi-fair LP and decompose the optimum into a lottery.
    Solve(SolveArgs),
    /// Report the fairness level of a policy against q.
    Audit(AuditArgs),
    /// Draw rankings from a lottery.
    Sample(SampleArgs),
    /// LP versus OPT/TS mixing across a phi grid for one instance.
    Tradeoff(TradeoffArgs),
    /// Genre tradeoff experiment on ML-100K or synthetic ratings.
    Movielens(MovielensArgs),
    /// Exposure of OPT versus Thompson-sampling rankings under relevance noise.
    Exposure(ExposureArgs),
}

/// Where the merit model and q come from.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Use the built-in three-agent example (one sure agent, two coins).
    #[arg(long, conflicts_with_all = ["model", "q"])]
    pub example2: bool,

    /// Merit model JSON (`{"kind": "empirical" | "dirichlet" | "gaussian", ...}`).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Top-k matrix CSV; overrides the one derived from the model.
    #[arg(long, value_name = "FILE")]
    pub q: Option<PathBuf>,

    /// Expected merits as a comma list, when no model is given.
    #[arg(
        long,
        value_name = "E1,E2,...",
        requires = "q",
        conflicts_with = "model"
    )]
    pub merits: Option<String>,

    /// Enumerate an empirical model exactly instead of sampling.
    #[arg(long)]
    pub exact: bool,

    /// Monte Carlo samples for q.
    #[arg(long, default_value_t = 50_000)]
    pub samples: usize,

    /// With --epsilon, size the Monte Carlo run by the DKW bound.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Target max error of q; the estimate is robustified by this amount.
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    #[arg(long)]
    pub phi: f64,

    /// dcg, reciprocal, precision:K or a comma list (default: dcg, or the
    /// example's own weights).
    #[arg(long)]
    pub weights: Option<WeightKind>,

    /// Write marginals.csv, lottery.json and report.json here instead of
    /// printing one JSON document.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Marginal rank matrix CSV.
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "lottery",
        conflicts_with = "lottery"
    )]
    pub marginals: Option<PathBuf>,

    /// Lottery JSON, audited through its marginals.
    #[arg(long, value_name = "FILE")]
    pub lottery: Option<PathBuf>,

    /// Top-k matrix CSV.
    #[arg(long, value_name = "FILE", required_unless_present = "example2")]
    pub q: Option<PathBuf>,

    #[arg(long, conflicts_with = "q")]
    pub example2: bool,

    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "FILE")]
    pub lottery: PathBuf,

    #[arg(long, default_value_t = 1)]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    #[arg(long)]
    pub weights: Option<WeightKind>,

    /// Grid resolution: phi = 0, 1/steps, ..., 1.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,

    #[arg(long, default_value = "csv")]
    pub format: ExportFormat,

    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MovielensArgs {
    /// Directory holding u.data and u.item; synthetic ratings are used when absent.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    #[arg(long)]
    pub genre: String,

    #[arg(long, default_value_t = 40)]
    pub n_items: usize,

    #[arg(long, default_value_t = 0.10)]
    pub subsample: f64,

    #[arg(long, default_value_t = 1.0)]
    pub prior_scale: f64,

    #[arg(long, default_value_t = 50_000)]
    pub samples: usize,

    #[arg(long, default_value_t = 20)]
    pub runs: usize,

    #[arg(long, default_value_t = 10)]
    pub steps: usize,

    #[arg(long, default_value = "dcg")]
    pub weights: WeightKind,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = "csv")]
    pub format: ExportFormat,

    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExposureArgs {
    /// Users x items score CSV (no header, values in [0, 1]).
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,

    /// Users in the synthetic score matrix used when --scores is absent.
    #[arg(long, default_value_t = 400)]
    pub synthetic_users: usize,

    #[arg(long, default_value_t = 100)]
    pub synthetic_items: usize,

    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,

    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 200)]
    pub users_per_arm: usize,

    #[arg(long, default_value_t = 5)]
    pub top_t: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}
