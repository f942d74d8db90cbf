use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spillover", version, about = "Spillover regressions on networks with isolated nodes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo study of the three spillover regressions.
    Simulate(SimulateArgs),
    /// One graph and treatment draw, exported as a degree vs exposure scatter.
    Scatter(ScatterArgs),
    /// Population coefficients and the isolation-bias decomposition.
    Oracle(OracleArgs),
    /// Audit an observed experiment for isolated-node imputation bias.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config file, or a run manifest (.json) to replay.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    /// Watts-Strogatz ring with rewiring and edge deletion.
    Ws,
    /// Erdős–Rényi G(n, p).
    Er,
}

#[derive(Debug, Args, Default)]
pub struct GraphArgs {
    /// Number of units.
    #[arg(long)]
    pub n: Option<usize>,
    /// Random-graph family.
    #[arg(long, value_enum)]
    pub graph: Option<GraphKind>,
    /// Watts-Strogatz ring neighbors (even).
    #[arg(long)]
    pub k: Option<usize>,
    /// Watts-Strogatz rewiring probability.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Watts-Strogatz edge deletion probability.
    #[arg(long)]
    pub delete_prob: Option<f64>,
    /// Erdős–Rényi expected degree.
    #[arg(long)]
    pub mean_degree: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Builtin design: 1, 2, 3, a comma list, or `all`.
    #[arg(long)]
    pub design: Option<String>,
    /// Spillover scale(s) c, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub c: Option<Vec<f64>>,
    /// Custom design table with columns degree,theta00,mu_de,lambda_se.
    #[arg(long, conflicts_with_all = ["design", "c"])]
    pub design_file: Option<PathBuf>,
    /// Outcome noise standard deviation for a custom design.
    #[arg(long, requires = "design_file")]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Monte Carlo repetitions.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Treatment probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Draw one graph and keep it for every repetition.
    #[arg(long)]
    pub fixed_graph: bool,
    /// Run repetitions on one thread.
    #[arg(long)]
    pub serial: bool,
    /// Manifest path; defaults to the results path with `.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Treatment probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Also write the drawn graph as an edge list.
    #[arg(long)]
    pub edges_out: Option<PathBuf>,
    /// Also write a synthetic dataset (id,treatment,outcome) for `audit`.
    #[arg(long)]
    pub data_out: Option<PathBuf>,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Degree histogram with columns degree,count.
    #[arg(long, conflicts_with_all = ["edges", "n", "graph", "k", "beta", "delete_prob", "mean_degree"])]
    pub histogram: Option<PathBuf>,
    /// Edge list with columns src,dst.
    #[arg(long, conflicts_with_all = ["n", "graph", "k", "beta", "delete_prob", "mean_degree"])]
    pub edges: Option<PathBuf>,
    /// Number of nodes for `--edges`, to count trailing isolated nodes.
    #[arg(long, requires = "edges")]
    pub nodes: Option<usize>,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Treatment probability.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: Common,
    /// Edge list with columns src,dst.
    #[arg(long)]
    pub edges: PathBuf,
    /// Unit data with id, treatment and outcome columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Unit id column (default `id`).
    #[arg(long)]
    pub id_col: Option<String>,
    /// Treatment column (default `treatment`).
    #[arg(long)]
    pub treatment_col: Option<String>,
    /// Outcome column (default `outcome`).
    #[arg(long)]
    pub outcome_col: Option<String>,
}
