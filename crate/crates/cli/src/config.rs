//! The JSON run configuration. Every section has defaults, so a config file
//! only needs the keys it changes. Command-line flags are applied on top.

use std::path::Path;

use anyhow::Context;
use cxhyp::eval::BucketRange;
use cxhyp::{RankingMode, SplitSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generate: GenerateConfig,
    pub model: ModelKind,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub split: SplitSpec,
    pub hyperbolicity: DeltaConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Unitball,
    Poincare,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    #[default]
    #[value(alias = "balanced_tree")]
    BalancedTree,
    #[value(alias = "compressed_graph")]
    CompressedGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub kind: GraphKind,
    /// Branching factor of a balanced tree.
    pub r: usize,
    /// Height of a balanced tree.
    pub h: usize,
    /// Node count of a compressed graph.
    pub m: usize,
    /// Number of random trees merged into a compressed graph.
    pub k: usize,
    pub seed: u64,
    /// Also compute exact δ.
    pub delta: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            kind: GraphKind::BalancedTree,
            r: 2,
            h: 2,
            m: 7,
            k: 1,
            seed: 0,
            delta: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub mode: RankingMode,
    pub hits: Vec<usize>,
    /// 1-N bucket list such as `"1,2-5,20+"`; no breakdown when absent.
    pub buckets: Option<String>,
    /// Drop the other true neighbours from the candidates of each rank.
    pub filtered: bool,
    /// Evaluation threads; 0 leaves the choice to the thread pool.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: RankingMode::Reconstruction,
            hits: vec![1, 3, 10],
            buckets: None,
            filtered: true,
            workers: 0,
        }
    }
}

impl EvalConfig {
    pub fn bucket_ranges(&self) -> anyhow::Result<Option<Vec<BucketRange>>> {
        match &self.buckets {
            None => Ok(None),
            Some(s) => BucketRange::parse_list(s)
                .map(Some)
                .map_err(|e| UsageError(format!("--buckets: {e}")).into()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DeltaModeKind {
    #[default]
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaConfig {
    pub mode: DeltaModeKind,
    /// Number of sampled 4-tuples.
    pub samples: usize,
    pub seed: u64,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig {
            mode: DeltaModeKind::Exact,
            samples: 100_000,
            seed: 0,
        }
    }
}
