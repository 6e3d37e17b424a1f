use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cxhyp::eval::{evaluate, evaluate_bucketed, RankingTask};
use cxhyp::graphs::{
    balanced_tree, compressed_graph, delta_hyperbolicity, load_edge_list, parse_edges_into,
    split_edges, transitive_closure, DeltaMode, Graph, Vocab,
};
use cxhyp::model::{save_checkpoint, train_manifold, AnyCheckpoint, Checkpoint, TrainOutput};
use cxhyp::{Manifold, PoincareBall, RankingMode, UnitBall};
use serde_json::{json, Value};

use crate::config::{DeltaModeKind, GraphKind, ModelKind, RunConfig};
use crate::UsageError;

const SCHEMA: &str = "v1";

fn load_graph(path: &Path, undirected: bool) -> Result<Graph> {
    Ok(load_edge_list(path, !undirected)?)
}

fn counts(g: &Graph) -> Value {
    json!({ "nodes": g.num_nodes(), "edges": g.num_edges() })
}

pub fn generate(config: &RunConfig, out: &Path) -> Result<Value> {
    let c = &config.generate;
    let graph = match c.kind {
        GraphKind::BalancedTree => balanced_tree(c.r, c.h)?,
        GraphKind::CompressedGraph => compressed_graph(c.m, c.k, c.seed)?,
    };
    graph.save_edge_list(out)?;
    let delta = if c.delta {
        Some(delta_hyperbolicity(&graph, DeltaMode::Exact)?)
    } else {
        None
    };
    eprintln!("wrote {} edges to {}", graph.num_edges(), out.display());
    Ok(json!({
        "schema": SCHEMA,
        "command": "generate",
        "config": { "generate": c },
        "out": out,
        "directed": graph.is_directed(),
        "counts": counts(&graph),
        "delta": delta,
    }))
}

fn train_model<M: Manifold>(
    graph: &Graph,
    config: &RunConfig,
    manifold: M,
    checkpoint: &Path,
) -> Result<Vec<cxhyp::model::EpochStats>> {
    let TrainOutput { table, trace } = train_manifold(graph, &config.train, manifold)?;
    save_checkpoint(&table, graph.tokens(), checkpoint)?;
    Ok(trace)
}

pub fn train(
    config: &RunConfig,
    edges: &Path,
    undirected: bool,
    checkpoint: &Path,
    trace_out: Option<&Path>,
) -> Result<Value> {
    config.train.validate()?;
    let graph = load_graph(edges, undirected)?;
    let start = Instant::now();
    let n = config.train.dim;
    let trace = match config.model {
        ModelKind::Unitball => train_model(&graph, config, UnitBall::new(n)?, checkpoint)?,
        ModelKind::Poincare => {
            let dim = n.checked_mul(2).context("dimension too large")?;
            train_model(&graph, config, PoincareBall::new(dim)?, checkpoint)?
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let final_loss = trace.last().map(|s| s.mean_loss);
    eprintln!(
        "trained {} epochs in {seconds:.2}s, final loss {}",
        trace.len(),
        final_loss.unwrap_or(f64::NAN)
    );
    let payload = json!({
        "schema": SCHEMA,
        "command": "train",
        "config": { "model": config.model, "train": &config.train },
        "edges": edges,
        "undirected": undirected,
        "checkpoint": checkpoint,
        "counts": counts(&graph),
        "epochs": trace,
        "final_loss": final_loss,
        "seconds": seconds,
    });
    if let Some(path) = trace_out {
        let text = serde_json::to_string_pretty(&payload)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(payload)
}

pub struct EvalInputs<'a> {
    pub checkpoint: &'a Path,
    pub edges: &'a Path,
    pub undirected: bool,
    pub train_edges: Option<&'a Path>,
    pub original_edges: Option<&'a Path>,
}

/// Reads an edge list whose tokens must all occur in `tokens`.
fn edges_in_vocab(path: &Path, tokens: &[String]) -> Result<Vec<(usize, usize)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut vocab = Vocab::from_tokens(tokens.to_vec());
    parse_edges_into(BufReader::new(file), &mut vocab, false).with_context(|| {
        format!(
            "{} does not match the checkpoint vocabulary",
            path.display()
        )
    })
}

fn eval_table<M: Manifold>(
    checkpoint: Checkpoint<M>,
    config: &RunConfig,
    inputs: &EvalInputs,
) -> Result<Value> {
    let Checkpoint { tokens, table } = checkpoint;
    let c = &config.eval;
    let directed = !inputs.undirected;
    let graph = Graph::new(
        tokens.clone(),
        edges_in_vocab(inputs.edges, &tokens)?,
        directed,
    )?;
    let (task, ranked_graph) = match c.mode {
        RankingMode::Reconstruction => {
            if inputs.train_edges.is_some() {
                bail!(UsageError("--train-edges only applies to link mode".into()));
            }
            (RankingTask::reconstruction(&graph), graph.clone())
        }
        RankingMode::LinkPrediction => {
            let Some(path) = inputs.train_edges else {
                bail!(UsageError("link mode needs --train-edges".into()));
            };
            let train = Graph::new(tokens.clone(), edges_in_vocab(path, &tokens)?, directed)?;
            let task = RankingTask::link_prediction(&graph, train.edges(), graph.edges())?;
            let mut all = train.edges().to_vec();
            all.extend_from_slice(graph.edges());
            (task, graph.with_edges(all)?)
        }
    };
    let task = if c.filtered { task } else { task.unfiltered() };
    let buckets = c.bucket_ranges()?;
    let report = match &buckets {
        None => evaluate(&table, &task, &c.hits)?,
        Some(ranges) => {
            let parents = match inputs.original_edges {
                Some(path) => Graph::new(tokens.clone(), edges_in_vocab(path, &tokens)?, directed)?
                    .parent_counts(),
                None => ranked_graph.parent_counts(),
            };
            evaluate_bucketed(&table, &task, &c.hits, ranges, &parents)?
        }
    };
    eprintln!(
        "ranked {} edges from {} nodes: MAP {:.4}",
        report.counts.edges, report.counts.nodes, report.map
    );
    let Value::Object(fields) = serde_json::to_value(&report)? else {
        unreachable!("reports serialize as objects");
    };
    let mut out = serde_json::Map::new();
    out.insert("schema".into(), SCHEMA.into());
    out.extend(fields);
    out.insert("config".into(), json!({ "eval": c }));
    out.insert(
        "inputs".into(),
        json!({
            "checkpoint": inputs.checkpoint,
            "edges": inputs.edges,
            "undirected": inputs.undirected,
            "train_edges": inputs.train_edges,
            "original_edges": inputs.original_edges,
        }),
    );
    Ok(Value::Object(out))
}

pub fn eval(config: &RunConfig, inputs: EvalInputs) -> Result<Value> {
    let checkpoint = cxhyp::model::load_any_checkpoint(inputs.checkpoint)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if config.eval.workers > 0 {
        pool = pool.num_threads(config.eval.workers);
    }
    pool.build()?.install(|| match checkpoint {
        AnyCheckpoint::UnitBall(c) => eval_table(c, config, &inputs),
        AnyCheckpoint::Poincare(c) => eval_table(c, config, &inputs),
    })
}

pub fn hyperbolicity(config: &RunConfig, edges: &Path) -> Result<Value> {
    let c = &config.hyperbolicity;
    // δ only depends on the undirected shortest-path metric.
    let graph = load_graph(edges, true)?;
    let mode = match c.mode {
        DeltaModeKind::Exact => DeltaMode::Exact,
        DeltaModeKind::Sampled => DeltaMode::Sampled {
            count: c.samples,
            seed: c.seed,
        },
    };
    let delta = delta_hyperbolicity(&graph, mode)?;
    Ok(json!({
        "schema": SCHEMA,
        "command": "hyperbolicity",
        "config": { "hyperbolicity": c },
        "edges": edges,
        "counts": counts(&graph),
        "delta": delta,
    }))
}

fn write_part(graph: &Graph, edges: &[(usize, usize)], path: &Path) -> Result<()> {
    graph.with_edges(edges.to_vec())?.save_edge_list(path)?;
    Ok(())
}

pub fn split(config: &RunConfig, edges: &Path, undirected: bool, out_dir: &Path) -> Result<Value> {
    config.split.validate()?;
    let graph = load_graph(edges, undirected)?;
    let parts = split_edges(&graph, &config.split)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = serde_json::Map::new();
    for (name, part) in [
        ("train", &parts.train),
        ("valid", &parts.valid),
        ("test", &parts.test),
    ] {
        let path = out_dir.join(format!("{name}.tsv"));
        write_part(&graph, part, &path)?;
        files.insert(name.into(), json!({ "path": path, "edges": part.len() }));
    }
    Ok(json!({
        "schema": SCHEMA,
        "command": "split",
        "config": { "split": config.split },
        "edges": edges,
        "undirected": undirected,
        "counts": counts(&graph),
        "files": files,
    }))
}

pub fn closure(edges: &Path, out: &Path) -> Result<Value> {
    let graph = load_graph(edges, false)?;
    let closed = transitive_closure(&graph)?;
    closed.save_edge_list(out)?;
    Ok(json!({
        "schema": SCHEMA,
        "command": "closure",
        "edges": edges,
        "out": out,
        "counts": counts(&graph),
        "closure_counts": counts(&closed),
    }))
}
