//! `cxhyp`: generate graphs, train embeddings, evaluate them.
//!
//! stdout carries one JSON document per command; diagnostics go to stderr.
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{DeltaModeKind, GraphKind, ModelKind, RunConfig};

/// An error caused by the invocation rather than by the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "cxhyp", version, about = "Complex hyperbolic graph embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic edge list.
    Generate(GenerateArgs),
    /// Train an embedding and write a checkpoint.
    Train(TrainArgs),
    /// Rank neighbours with a checkpoint and report MAP, MRR and Hits@N.
    Eval(EvalArgs),
    /// Gromov δ-hyperbolicity of an edge list.
    Hyperbolicity(DeltaArgs),
    /// Split an edge list into train, validation and test files.
    Split(SplitArgs),
    /// Write the transitive closure of a directed edge list.
    Closure(ClosureArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GraphInput {
    /// Edge list with one `child<TAB>parent` pair per line.
    #[arg(long, value_name = "PATH")]
    edges: PathBuf,
    /// Treat edges as symmetric.
    #[arg(long)]
    undirected: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_enum)]
    kind: Option<GraphKind>,
    /// Branching factor (balanced tree).
    #[arg(long)]
    r: Option<usize>,
    /// Height (balanced tree).
    #[arg(long)]
    h: Option<usize>,
    /// Node count (compressed graph).
    #[arg(long)]
    m: Option<usize>,
    /// Number of merged random trees (compressed graph).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also report exact δ.
    #[arg(long)]
    delta: bool,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Denominator {
    /// Negatives plus the positive.
    Softmax,
    /// Negatives plus the zero-distance self term.
    SelfTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum MetricModeArg {
    Conformal,
    #[value(alias = "quadratic_form", alias = "quadratic-form")]
    Quadratic,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// Also write the JSON trace here.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Complex dimension; the Poincaré model uses twice as many real coordinates.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    /// Burn-in epochs at a reduced learning rate.
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    eps_proj: Option<f64>,
    #[arg(long, value_enum)]
    metric_mode: Option<MetricModeArg>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Softmax denominator of the loss.
    #[arg(long, value_enum)]
    denominator: Option<Denominator>,
    /// More than one worker trains with lock-free parallel updates.
    #[arg(long, env = "CXHYP_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    /// Edges to rank: the whole graph for reconstruction, held-out edges for
    /// link prediction.
    #[command(flatten)]
    input: GraphInput,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<cxhyp::RankingMode>,
    /// Training edges, filtered from the candidates in link mode.
    #[arg(long, value_name = "PATH")]
    train_edges: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    hits: Option<Vec<usize>>,
    /// 1-N breakdown by parent count.
    #[arg(long, num_args = 0..=1, default_missing_value = "1,2-5,6-10,11-20,20+")]
    buckets: Option<String>,
    /// Graph whose parent counts assign nodes to buckets.
    #[arg(long, value_name = "PATH")]
    original_edges: Option<PathBuf>,
    /// Keep the other true neighbours among the candidates.
    #[arg(long)]
    unfiltered: bool,
    #[arg(long, env = "CXHYP_WORKERS")]
    workers: Option<usize>,
}

fn parse_mode(s: &str) -> Result<cxhyp::RankingMode, String> {
    s.parse().map_err(|e: cxhyp::Error| e.to_string())
}

#[derive(Debug, Args)]
struct DeltaArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "PATH")]
    edges: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<DeltaModeKind>,
    /// 4-tuples drawn in sampled mode.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    input: GraphInput,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    valid_frac: Option<f64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving train.tsv, valid.tsv and test.tsv.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ClosureArgs {
    #[arg(long, value_name = "PATH")]
    edges: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl GenerateArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::load(self.config.config.as_deref())?;
        let g = &mut c.generate;
        set(&mut g.kind, self.kind);
        set(&mut g.r, self.r);
        set(&mut g.h, self.h);
        set(&mut g.m, self.m);
        set(&mut g.k, self.k);
        set(&mut g.seed, self.seed);
        g.delta |= self.delta;
        Ok(c)
    }
}

impl TrainArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::load(self.config.config.as_deref())?;
        set(&mut c.model, self.model);
        let t = &mut c.train;
        set(&mut t.seed, self.seed);
        set(&mut t.dim, self.dim);
        set(&mut t.epochs, self.epochs);
        set(&mut t.lr, self.lr);
        set(&mut t.negatives, self.negatives);
        set(&mut t.burnin_epochs, self.burnin);
        set(&mut t.eps_proj, self.eps_proj);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.workers, self.workers);
        match self.metric_mode {
            Some(MetricModeArg::Conformal) => t.metric_mode = cxhyp::MetricMode::Conformal,
            Some(MetricModeArg::Quadratic) => t.metric_mode = cxhyp::MetricMode::QuadraticForm,
            None => {}
        }
        match self.denominator {
            Some(Denominator::Softmax) => {
                t.include_positive_in_denominator = true;
                t.self_in_denominator = false;
            }
            Some(Denominator::SelfTerm) => *t = t.clone().with_self_term_denominator(),
            None => {}
        }
        Ok(c)
    }
}

impl EvalArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::load(self.config.config.as_deref())?;
        let e = &mut c.eval;
        set(&mut e.mode, self.mode);
        set(&mut e.hits, self.hits.clone());
        set(&mut e.workers, self.workers);
        if self.buckets.is_some() {
            e.buckets = self.buckets.clone();
        }
        if self.unfiltered {
            e.filtered = false;
        }
        Ok(c)
    }
}

impl DeltaArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::load(self.config.config.as_deref())?;
        let d = &mut c.hyperbolicity;
        set(&mut d.mode, self.mode);
        set(&mut d.samples, self.samples);
        set(&mut d.seed, self.seed);
        Ok(c)
    }
}

impl SplitArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut c = RunConfig::load(self.config.config.as_deref())?;
        let s = &mut c.split;
        set(&mut s.train_frac, self.train_frac);
        set(&mut s.valid_frac, self.valid_frac);
        set(&mut s.test_frac, self.test_frac);
        set(&mut s.seed, self.seed);
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<serde_json::Value> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a.resolve()?, &a.out),
        Command::Train(a) => {
            let c = a.resolve()?;
            commands::train(
                &c,
                &a.input.edges,
                a.input.undirected,
                &a.checkpoint,
                a.trace.as_deref(),
            )
        }
        Command::Eval(a) => {
            let c = a.resolve()?;
            commands::eval(
                &c,
                commands::EvalInputs {
                    checkpoint: &a.checkpoint,
                    edges: &a.input.edges,
                    undirected: a.input.undirected,
                    train_edges: a.train_edges.as_deref(),
                    original_edges: a.original_edges.as_deref(),
                },
            )
        }
        Command::Hyperbolicity(a) => commands::hyperbolicity(&a.resolve()?, &a.edges),
        Command::Split(a) => {
            let c = a.resolve()?;
            commands::split(&c, &a.input.edges, a.input.undirected, &a.out_dir)
        }
        Command::Closure(a) => commands::closure(&a.edges, &a.out),
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.downcast_ref::<UsageError>().is_some()
        || matches!(
            err.downcast_ref::<cxhyp::Error>(),
            Some(cxhyp::Error::Config(_) | cxhyp::Error::NodeCapExceeded { .. })
        )
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(payload) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&payload).expect("serializable payload")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            if is_usage(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
