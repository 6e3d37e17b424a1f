//! Ranking protocol and MAP / MRR / Hits@N.
//!
//! For every evaluated node `z` and each of its true neighbours `w`, the
//! candidates are ranked by distance to `z`. Ties count against the model.
//! Two numbers come out per neighbour:
//!
//! * `rank`: position among the candidates of the chosen protocol; feeds MRR
//!   and Hits@N.
//! * `position`: position in the list that still holds every other true
//!   neighbour; feeds MAP, whose precision counts the true neighbours that
//!   appear before `w`.
//!
//! In link-prediction mode and in unfiltered reconstruction the two coincide.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::model::{Embeddings, Manifold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    /// Rank true neighbours among all nodes except `z` and its other true
    /// neighbours.
    Reconstruction,
    /// Rank held-out neighbours among all nodes not linked to `z` in training.
    #[serde(alias = "link")]
    LinkPrediction,
}

impl FromStr for RankingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reconstruction" => Ok(RankingMode::Reconstruction),
            "link" | "link_prediction" | "link-prediction" => Ok(RankingMode::LinkPrediction),
            other => Err(Error::Config(format!("unknown ranking mode {other:?}"))),
        }
    }
}

/// Who is ranked against what.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTask {
    mode: RankingMode,
    filtered: bool,
    num_nodes: usize,
    truth: Vec<Vec<usize>>,
    known: Vec<Vec<usize>>,
}

fn adjacency(m: usize, edges: &[(usize, usize)], symmetric: bool) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m];
    for &(u, v) in edges {
        adj[u].push(v);
        if symmetric {
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

impl RankingTask {
    /// Every edge of `graph` is a true neighbour; nothing is held out.
    /// Undirected graphs are ranked from both endpoints.
    pub fn reconstruction(graph: &Graph) -> Self {
        let m = graph.num_nodes();
        RankingTask {
            mode: RankingMode::Reconstruction,
            filtered: true,
            num_nodes: m,
            truth: (0..m).map(|u| graph.neighbors(u)).collect(),
            known: vec![Vec::new(); m],
        }
    }

    /// Ranks `eval` edges with `train` edges filtered from the candidates.
    /// Node ids and directedness come from `graph`.
    pub fn link_prediction(
        graph: &Graph,
        train: &[(usize, usize)],
        eval: &[(usize, usize)],
    ) -> Result<Self> {
        let m = graph.num_nodes();
        let symmetric = !graph.is_directed();
        for &(u, v) in train.iter().chain(eval) {
            for id in [u, v] {
                if id >= m {
                    return Err(Error::InvalidId { id, len: m });
                }
            }
        }
        let known = adjacency(m, train, symmetric);
        let truth = adjacency(m, eval, symmetric);
        for (z, ws) in truth.iter().enumerate() {
            if let Some(&w) = ws.iter().find(|w| known[z].binary_search(w).is_ok()) {
                return Err(Error::Config(format!(
                    "edge ({}, {}) is in both the training and evaluation sets",
                    graph.tokens()[z],
                    graph.tokens()[w]
                )));
            }
        }
        Ok(RankingTask {
            mode: RankingMode::LinkPrediction,
            filtered: true,
            num_nodes: m,
            truth,
            known,
        })
    }

    /// Keeps the other true neighbours among the candidates when ranking one
    /// of them, so ranks equal list positions. Only changes reconstruction.
    pub fn unfiltered(mut self) -> Self {
        self.filtered = false;
        self
    }

    pub fn mode(&self) -> RankingMode {
        self.mode
    }

    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// True neighbours ranked for `z`.
    pub fn truth(&self, z: usize) -> &[usize] {
        &self.truth[z]
    }

    /// Nodes with at least one true neighbour.
    pub fn eval_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes).filter(|&z| !self.truth[z].is_empty())
    }
}

/// Ranks of the true neighbours of one node, in the order of
/// [`RankingTask::truth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborRanks {
    pub node: usize,
    pub ranks: Vec<usize>,
    pub positions: Vec<usize>,
}

/// Ranks every true neighbour of `z`.
pub fn rank_neighbors<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
    z: usize,
) -> Result<NeighborRanks> {
    check_table(table, task)?;
    if z >= task.num_nodes {
        return Err(Error::InvalidId {
            id: z,
            len: task.num_nodes,
        });
    }
    let mut dists = Vec::new();
    Ok(rank_node(table, task, z, &mut dists))
}

fn check_table<M: Manifold>(table: &Embeddings<M>, task: &RankingTask) -> Result<()> {
    if table.num_rows() != task.num_nodes {
        return Err(Error::DimensionMismatch {
            expected: task.num_nodes,
            found: table.num_rows(),
        });
    }
    Ok(())
}

fn rank_node<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
    z: usize,
    dists: &mut Vec<f64>,
) -> NeighborRanks {
    let truth = &task.truth[z];
    let known = &task.known[z];
    table.distances_from(z, dists);

    // Distances of candidates that are not true neighbours.
    let mut others: Vec<f64> = (0..task.num_nodes)
        .filter(|&x| x != z && truth.binary_search(&x).is_err() && known.binary_search(&x).is_err())
        .map(|x| dists[x])
        .collect();
    others.sort_unstable_by(f64::total_cmp);

    let mut ranks = Vec::with_capacity(truth.len());
    let mut positions = Vec::with_capacity(truth.len());
    for &w in truth {
        let dw = dists[w];
        let base = 1 + others.partition_point(|&d| d <= dw);
        let tied_truth = truth.iter().filter(|&&v| v != w && dists[v] <= dw).count();
        let position = base + tied_truth;
        positions.push(position);
        let filtered = task.filtered && task.mode == RankingMode::Reconstruction;
        ranks.push(if filtered { base } else { position });
    }
    NeighborRanks {
        node: z,
        ranks,
        positions,
    }
}

/// Mean over nodes of the mean precision at each neighbour's position.
/// `lists[i]` holds the positions of node `i`'s true neighbours.
pub fn map_score(lists: &[Vec<usize>]) -> f64 {
    mean_over_nodes(lists, |positions| {
        let sum: f64 = positions
            .iter()
            .map(|&p| positions.iter().filter(|&&q| q <= p).count() as f64 / p as f64)
            .sum();
        sum / positions.len() as f64
    })
}

/// Mean over nodes of the mean reciprocal rank.
pub fn mrr_score(lists: &[Vec<usize>]) -> f64 {
    mean_over_nodes(lists, |ranks| {
        ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64
    })
}

/// Fraction of nodes with at least one neighbour ranked `≤ n`.
pub fn hits_at_n(lists: &[Vec<usize>], n: usize) -> f64 {
    mean_over_nodes(lists, |ranks| {
        if ranks.iter().any(|&r| r <= n) {
            1.0
        } else {
            0.0
        }
    })
}

fn mean_over_nodes(lists: &[Vec<usize>], f: impl Fn(&[usize]) -> f64) -> f64 {
    let lists: Vec<&Vec<usize>> = lists.iter().filter(|l| !l.is_empty()).collect();
    if lists.is_empty() {
        return 0.0;
    }
    lists.iter().map(|l| f(l)).sum::<f64>() / lists.len() as f64
}

/// Inclusive range of parent counts; `hi == None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketRange {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl BucketRange {
    pub fn contains(&self, count: usize) -> bool {
        count >= self.lo && self.hi.is_none_or(|hi| count <= hi)
    }

    /// Parses a comma-separated list such as `1,2-5,6-10,11-20,20+`.
    /// `N+` means strictly more than `N`.
    pub fn parse_list(s: &str) -> Result<Vec<BucketRange>> {
        let ranges: Vec<BucketRange> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if ranges.is_empty() {
            return Err(Error::Config("empty bucket list".into()));
        }
        Ok(ranges)
    }

    pub fn default_list() -> Vec<BucketRange> {
        Self::parse_list("1,2-5,6-10,11-20,20+").expect("valid default buckets")
    }
}

impl FromStr for BucketRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad bucket {s:?}; expected N, A-B or N+"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let range = if let Some(n) = s.strip_suffix('+') {
            BucketRange {
                lo: num(n)? + 1,
                hi: None,
            }
        } else if let Some((a, b)) = s.split_once('-') {
            BucketRange {
                lo: num(a)?,
                hi: Some(num(b)?),
            }
        } else {
            let n = num(s)?;
            BucketRange { lo: n, hi: Some(n) }
        };
        if range.hi.is_some_and(|hi| hi < range.lo) {
            return Err(bad());
        }
        Ok(range)
    }
}

impl fmt::Display for BucketRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            None => write!(f, "{}+", self.lo - 1),
            Some(hi) if hi == self.lo => write!(f, "{hi}"),
            Some(hi) => write!(f, "{}-{hi}", self.lo),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub nodes: usize,
    pub edges: usize,
}

/// Hits@N values keyed by N, serialized as a JSON object in ascending N.
#[derive(Debug, Clone, PartialEq)]
pub struct Hits(pub Vec<(usize, f64)>);

impl Hits {
    pub fn get(&self, n: usize) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == n).map(|(_, v)| *v)
    }
}

impl Serialize for Hits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (n, v) in &self.0 {
            map.serialize_entry(&n.to_string(), v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub range: BucketRange,
    pub map: f64,
    pub mrr: f64,
    pub hits: Hits,
    pub counts: Counts,
}

impl Serialize for BucketReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BucketReport", 5)?;
        st.serialize_field("range", &self.range.to_string())?;
        st.serialize_field("map", &self.map)?;
        st.serialize_field("mrr", &self.mrr)?;
        st.serialize_field("hits", &self.hits)?;
        st.serialize_field("counts", &self.counts)?;
        st.end()
    }
}

/// Aggregate metrics. `buckets` is `None` unless a 1-N breakdown was asked
/// for; empty buckets are left out of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub map: f64,
    pub mrr: f64,
    pub hits: Hits,
    pub buckets: Option<Vec<BucketReport>>,
    pub counts: Counts,
}

fn normalize_ns(ns: &[usize]) -> Result<Vec<usize>> {
    if ns.contains(&0) {
        return Err(Error::Config("Hits@N needs N >= 1".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

/// Ranks every evaluated node, in parallel, returned in node order.
pub fn rank_all<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
) -> Result<Vec<NeighborRanks>> {
    check_table(table, task)?;
    let nodes: Vec<usize> = task.eval_nodes().collect();
    Ok(nodes
        .par_iter()
        .map_init(Vec::new, |dists, &z| rank_node(table, task, z, dists))
        .collect())
}

fn summarize(ranked: &[&NeighborRanks], ns: &[usize]) -> (f64, f64, Hits, Counts) {
    let ranks: Vec<Vec<usize>> = ranked.iter().map(|r| r.ranks.clone()).collect();
    let positions: Vec<Vec<usize>> = ranked.iter().map(|r| r.positions.clone()).collect();
    let hits = Hits(ns.iter().map(|&n| (n, hits_at_n(&ranks, n))).collect());
    let counts = Counts {
        nodes: ranked.len(),
        edges: ranks.iter().map(Vec::len).sum(),
    };
    (map_score(&positions), mrr_score(&ranks), hits, counts)
}

/// Builds a report from precomputed ranks.
pub fn report_from_ranks(ranked: &[NeighborRanks], ns: &[usize]) -> Result<EvalReport> {
    let ns = normalize_ns(ns)?;
    let all: Vec<&NeighborRanks> = ranked.iter().collect();
    let (map, mrr, hits, counts) = summarize(&all, &ns);
    Ok(EvalReport {
        map,
        mrr,
        hits,
        buckets: None,
        counts,
    })
}

/// MAP, MRR and Hits@N for every N in `ns`.
pub fn evaluate<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
    ns: &[usize],
) -> Result<EvalReport> {
    report_from_ranks(&rank_all(table, task)?, ns)
}

fn bucket_reports(
    ranked: &[NeighborRanks],
    ns: &[usize],
    buckets: &[BucketRange],
    parent_counts: &[usize],
) -> Vec<BucketReport> {
    buckets
        .iter()
        .filter_map(|&range| {
            let members: Vec<&NeighborRanks> = ranked
                .iter()
                .filter(|r| range.contains(parent_counts[r.node]))
                .collect();
            if members.is_empty() {
                return None;
            }
            let (map, mrr, hits, counts) = summarize(&members, ns);
            Some(BucketReport {
                range,
                map,
                mrr,
                hits,
                counts,
            })
        })
        .collect()
}

fn check_parent_counts(task: &RankingTask, parent_counts: &[usize]) -> Result<()> {
    if parent_counts.len() != task.num_nodes {
        return Err(Error::DimensionMismatch {
            expected: task.num_nodes,
            found: parent_counts.len(),
        });
    }
    Ok(())
}

/// Metrics per 1-N bucket. Each evaluated node lands in the bucket of its
/// parent count in `parent_counts` (usually taken from the graph before
/// transitive closure).
pub fn bucketed_1n_report<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
    buckets: &[BucketRange],
    parent_counts: &[usize],
    ns: &[usize],
) -> Result<Vec<BucketReport>> {
    check_parent_counts(task, parent_counts)?;
    let ns = normalize_ns(ns)?;
    let ranked = rank_all(table, task)?;
    Ok(bucket_reports(&ranked, &ns, buckets, parent_counts))
}

/// [`evaluate`] plus the 1-N breakdown.
pub fn evaluate_bucketed<M: Manifold>(
    table: &Embeddings<M>,
    task: &RankingTask,
    ns: &[usize],
    buckets: &[BucketRange],
    parent_counts: &[usize],
) -> Result<EvalReport> {
    check_parent_counts(task, parent_counts)?;
    let ranked = rank_all(table, task)?;
    let mut report = report_from_ranks(&ranked, ns)?;
    let ns = normalize_ns(ns)?;
    report.buckets = Some(bucket_reports(&ranked, &ns, buckets, parent_counts));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ComplexPoint;
    use crate::graphs::balanced_tree;
    use crate::model::{init_embeddings, EmbeddingTable};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_table(xs: &[f64]) -> EmbeddingTable {
        let pts: Vec<ComplexPoint> = xs
            .iter()
            .map(|&x| ComplexPoint::new(vec![x], vec![0.0]).unwrap())
            .collect();
        EmbeddingTable::from_points(&pts).unwrap()
    }

    #[test]
    fn score_examples() {
        assert_eq!(map_score(&[vec![1]]), 1.0);
        assert!((map_score(&[vec![1, 3]]) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(map_score(&[vec![4]]), 0.25);
        assert_eq!(mrr_score(&[vec![1, 1], vec![1]]), 1.0);
        assert!((mrr_score(&[vec![1, 3]]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(mrr_score(&[vec![4]]), 0.25);
        assert_eq!(hits_at_n(&[vec![4]], 3), 0.0);
        assert_eq!(hits_at_n(&[vec![4]], 10), 1.0);
        assert_eq!(hits_at_n(&[vec![1], vec![5]], 3), 0.5);
    }

    #[test]
    fn unique_nearest_and_ties() {
        // z=0 at origin, neighbour 1; candidate 2 farther, then tied.
        let g = Graph::with_numeric_tokens(3, vec![(0, 1)], true).unwrap();
        let task = RankingTask::reconstruction(&g);
        let r = rank_neighbors(&line_table(&[0.0, 0.2, 0.5]), &task, 0).unwrap();
        assert_eq!(r.ranks, [1]);
        let r = rank_neighbors(&line_table(&[0.0, 0.2, -0.2]), &task, 0).unwrap();
        assert_eq!(r.ranks, [2]);
        assert!(matches!(
            rank_neighbors(&line_table(&[0.0, 0.2, -0.2]), &task, 3),
            Err(Error::InvalidId { .. })
        ));
    }

    #[test]
    fn perfect_path_embedding() {
        let g = Graph::with_numeric_tokens(3, vec![(0, 1), (1, 2)], true).unwrap();
        let report = evaluate(
            &line_table(&[-0.6, 0.0, 0.1]),
            &RankingTask::reconstruction(&g),
            &[1, 3, 10],
        )
        .unwrap();
        assert_eq!(
            (report.map, report.mrr, report.hits.get(1)),
            (1.0, 1.0, Some(1.0))
        );
        assert_eq!(report.counts, Counts { nodes: 2, edges: 2 });
    }

    #[test]
    fn filtered_rank_versus_position() {
        // z=0 with true neighbours 1 and 3; node 2 lies between them.
        let g = Graph::with_numeric_tokens(4, vec![(0, 1), (0, 3)], true).unwrap();
        let t = line_table(&[0.0, 0.1, 0.2, 0.3]);
        let r = rank_neighbors(&t, &RankingTask::reconstruction(&g), 0).unwrap();
        assert_eq!(r.ranks, [1, 2]);
        assert_eq!(r.positions, [1, 3]);
        let raw = RankingTask::reconstruction(&g).unfiltered();
        assert_eq!(rank_neighbors(&t, &raw, 0).unwrap().ranks, [1, 3]);
        let link = RankingTask::link_prediction(&g, &[], g.edges()).unwrap();
        let r = rank_neighbors(&t, &link, 0).unwrap();
        assert_eq!(r.ranks, r.positions);
        let train_filtered = RankingTask::link_prediction(&g, &[(0, 2)], g.edges()).unwrap();
        let r = rank_neighbors(&t, &train_filtered, 0).unwrap();
        assert_eq!(r.ranks, [1, 2]);
    }

    #[test]
    fn link_task_rejects_overlap() {
        let g = Graph::with_numeric_tokens(3, vec![(0, 1), (1, 2)], false).unwrap();
        assert!(RankingTask::link_prediction(&g, &[(0, 1)], &[(1, 0)]).is_err());
        assert!(RankingTask::link_prediction(&g, &[(0, 1)], &[(1, 2)]).is_ok());
        assert!(RankingTask::link_prediction(&g, &[(0, 5)], &[(1, 2)]).is_err());
    }

    #[test]
    fn random_embeddings_score_low() {
        let g = crate::graphs::compressed_graph(50, 1, 5).unwrap();
        assert_eq!(g.num_nodes(), 50);
        let t = init_embeddings(g.num_nodes(), 4, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spread: Vec<f64> = t.data().iter().map(|_| rng.gen_range(-0.3..0.3)).collect();
        let t = Embeddings::from_data(*t.manifold(), spread).unwrap();
        let report = evaluate(&t, &RankingTask::reconstruction(&g), &[1]).unwrap();
        assert!(report.map < 0.5, "{}", report.map);
    }

    #[test]
    fn buckets_parse_and_display() {
        let b = BucketRange::default_list();
        let shown: Vec<String> = b.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["1", "2-5", "6-10", "11-20", "20+"]);
        assert!(b[4].contains(21) && !b[4].contains(20));
        assert!(b[3].contains(20));
        assert!(BucketRange::parse_list("5-2").is_err());
        assert!(BucketRange::parse_list("x").is_err());
        assert!(BucketRange::parse_list("").is_err());
    }

    #[test]
    fn tree_lands_in_first_bucket() {
        let g = balanced_tree(2, 3).unwrap();
        let t = init_embeddings(g.num_nodes(), 2, 0).unwrap();
        let task = RankingTask::reconstruction(&g);
        let buckets = BucketRange::default_list();
        let rep = bucketed_1n_report(&t, &task, &buckets, &g.parent_counts(), &[1, 10]).unwrap();
        assert_eq!(rep.len(), 1);
        assert_eq!(rep[0].range.to_string(), "1");
        assert_eq!(rep[0].counts.edges, g.num_edges());
    }

    #[test]
    fn two_parent_fixture_lands_in_second_bucket() {
        // 3 and 4 each have two parents; no diamonds.
        let g = Graph::with_numeric_tokens(5, vec![(3, 0), (3, 1), (4, 1), (4, 2)], true).unwrap();
        let t = init_embeddings(5, 2, 1).unwrap();
        let task = RankingTask::reconstruction(&g);
        let rep = evaluate_bucketed(
            &t,
            &task,
            &[1],
            &BucketRange::default_list(),
            &g.parent_counts(),
        )
        .unwrap();
        let buckets = rep.buckets.unwrap();
        assert_eq!(buckets.len(), 1);
        assert_eq!(buckets[0].range.to_string(), "2-5");
        assert_eq!(buckets[0].counts.edges, rep.counts.edges);
    }

    #[test]
    fn json_key_order() {
        let g = Graph::with_numeric_tokens(3, vec![(0, 1), (1, 2)], true).unwrap();
        let rep = evaluate(
            &line_table(&[-0.6, 0.0, 0.1]),
            &RankingTask::reconstruction(&g),
            &[10, 1, 3],
        )
        .unwrap();
        let s = serde_json::to_string(&rep).unwrap();
        assert!(
            s.starts_with(
                r#"{"map":1.0,"mrr":1.0,"hits":{"1":1.0,"3":1.0,"10":1.0},"buckets":null,"counts":"#
            ),
            "{s}"
        );
    }

    #[test]
    fn zero_n_rejected() {
        assert!(report_from_ranks(&[], &[0]).is_err());
    }

    fn random_instance(seed: u64) -> (EmbeddingTable, RankingTask) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(3..=10);
        let mut edges = Vec::new();
        for u in 0..m {
            for v in 0..m {
                if u != v && rng.gen_bool(0.25) {
                    edges.push((u, v));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1));
        }
        let g = Graph::with_numeric_tokens(m, edges, true).unwrap();
        let data = (0..m * 4).map(|_| rng.gen_range(-0.45..0.45)).collect();
        let t = Embeddings::from_data(crate::model::UnitBall::new(2).unwrap(), data).unwrap();
        (t, RankingTask::reconstruction(&g))
    }

    proptest! {
        #[test]
        fn hits_monotone_in_n(seed in 0u64..500) {
            let (t, task) = random_instance(seed);
            let rep = evaluate(&t, &task, &[1, 2, 3, 5, 10]).unwrap();
            for w in rep.hits.0.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            prop_assert!(rep.mrr <= 1.0 && rep.map <= 1.0);
        }

        #[test]
        fn global_phase_leaves_metrics(seed in 0u64..200, theta in 0.0f64..std::f64::consts::TAU) {
            let (t, task) = random_instance(seed);
            let n = t.dim();
            let (c, s) = (theta.cos(), theta.sin());
            let mut rotated = t.data().to_vec();
            for row in rotated.chunks_mut(2 * n) {
                for j in 0..n {
                    let (re, im) = (row[j], row[n + j]);
                    row[j] = re * c - im * s;
                    row[n + j] = re * s + im * c;
                }
            }
            let r = Embeddings::from_data(*t.manifold(), rotated).unwrap();
            for i in 0..t.num_rows() {
                for j in 0..t.num_rows() {
                    prop_assert!((t.distance(i, j).unwrap() - r.distance(i, j).unwrap()).abs() < 1e-12);
                }
            }
            let a = evaluate(&t, &task, &[1, 3]).unwrap();
            let b = evaluate(&r, &task, &[1, 3]).unwrap();
            prop_assert!((a.map - b.map).abs() < 1e-12 && (a.mrr - b.mrr).abs() < 1e-12);
            prop_assert_eq!(a.hits, b.hits);
        }

        #[test]
        fn single_neighbour_map_equals_mrr(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.gen_range(3..=12);
            let edges: Vec<_> = (1..m).map(|u| (u, rng.gen_range(0..u))).collect();
            let g = Graph::with_numeric_tokens(m, edges, true).unwrap();
            let t = init_embeddings(m, 2, seed).unwrap();
            let rep = evaluate(&t, &RankingTask::reconstruction(&g), &[1]).unwrap();
            prop_assert_eq!(rep.map, rep.mrr);
        }
    }
}
