//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cxhyp::eval::RankingTask;
use cxhyp::geometry::{distance, klein_real_distance, poincare_line_distance};
use cxhyp::gradients::{distance_partials, finite_difference_oracle};
use cxhyp::graphs::Graph;
use cxhyp::model::{batch_gradient, soft_ranking_loss, LossBatch};
use cxhyp::{ComplexPoint, ComplexScalar, EmbeddingTable, Embeddings, PointRef, UnitBall};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_complex_point(rng: &mut impl Rng, n: usize, radius: f64) -> ComplexPoint {
    loop {
        let re: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        let im: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        let norm_sq: f64 = re.iter().chain(&im).map(|v| v * v).sum();
        if norm_sq < radius * radius {
            return ComplexPoint::new(re, im).unwrap();
        }
    }
}

fn random_disk(rng: &mut impl Rng, radius: f64) -> ComplexScalar {
    loop {
        let c = ComplexScalar::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        if c.norm_sqr() < radius * radius {
            return c;
        }
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

/// Max |ball distance − disk distance| over points `a·u`, `b·u` on random
/// complex lines through the origin.
pub fn line_restriction_max_error(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=6);
        let dir: Vec<ComplexScalar> = (0..n)
            .map(|_| ComplexScalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let len = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let (a, b) = (random_disk(&mut rng, 0.999), random_disk(&mut rng, 0.999));
        let on_line = |s: ComplexScalar| {
            let coords: Vec<ComplexScalar> = dir.iter().map(|c| s * c / len).collect();
            ComplexPoint::from_complex(&coords).unwrap()
        };
        let (z, w) = (on_line(a), on_line(b));
        let ball = distance(z.as_ref(), w.as_ref()).unwrap();
        let disk = poincare_line_distance(a, b).unwrap();
        worst = worst.max((ball - disk).abs());
    }
    worst
}

/// Max |ball distance − Klein distance| over random real points.
pub fn real_restriction_max_error(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=6);
        let mut real_point = || loop {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() < 0.998 {
                return x;
            }
        };
        let (x, y) = (real_point(), real_point());
        let lift = |x: &[f64]| ComplexPoint::new(x.to_vec(), vec![0.0; n]).unwrap();
        let ball = distance(lift(&x).as_ref(), lift(&y).as_ref()).unwrap();
        let klein = klein_real_distance(&x, &y).unwrap();
        worst = worst.max((ball - klein).abs());
    }
    worst
}

/// Max relative L2 error of the closed-form partials against central
/// differences with step `1e-6`.
pub fn partials_max_rel_error(pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let n = rng.gen_range(1..=5);
        let z = random_complex_point(&mut rng, n, 0.9);
        let w = random_complex_point(&mut rng, n, 0.9);
        let exact = distance_partials(z.as_ref(), w.as_ref()).unwrap().to_row();
        let fd = finite_difference_oracle(|p: PointRef| distance(p, w.as_ref()), z.as_ref(), 1e-6)
            .unwrap()
            .to_row();
        worst = worst.max(rel_l2(&exact, &fd));
    }
    worst
}

/// Max relative L2 error of the batch-loss gradient of every touched row
/// against central differences, over `batches` random batches.
pub fn batch_gradient_max_rel_error(batches: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for round in 0..batches {
        let (n, m) = (rng.gen_range(1..=4), 10);
        let pts: Vec<ComplexPoint> = (0..m)
            .map(|_| random_complex_point(&mut rng, n, 0.8))
            .collect();
        let table = EmbeddingTable::from_points(&pts).unwrap();
        let negatives: Vec<usize> = (0..6).map(|_| rng.gen_range(2..m)).collect();
        let batch = LossBatch::new(0, 1, negatives).with_denominator(round % 2 == 1, round % 4 < 2);
        let (_, grads) = batch_gradient(&table, &batch).unwrap();
        for (id, g) in grads {
            let f = |p: PointRef| {
                let mut moved = pts.clone();
                moved[id] = ComplexPoint::new(p.re.to_vec(), p.im.to_vec())?;
                soft_ranking_loss(&EmbeddingTable::from_points(&moved)?, &batch)
            };
            let fd = finite_difference_oracle(f, table.point(id), 1e-6)
                .unwrap()
                .to_row();
            worst = worst.max(rel_l2(&g, &fd));
        }
    }
    worst
}

/// A random ranking problem on at most 12 nodes.
pub struct Instance {
    pub table: Embeddings<UnitBall>,
    pub graph: Graph,
    /// Edges that are ranked.
    pub eval: Vec<(usize, usize)>,
    /// Edges removed from the candidates (link prediction only).
    pub train: Vec<(usize, usize)>,
    pub link: bool,
    pub filtered: bool,
}

impl Instance {
    pub fn task(&self) -> RankingTask {
        let task = if self.link {
            RankingTask::link_prediction(&self.graph, &self.train, &self.eval).unwrap()
        } else {
            RankingTask::reconstruction(&self.graph)
        };
        if self.filtered {
            task
        } else {
            task.unfiltered()
        }
    }
}

/// Points come from a small pool so that exact distance ties are common.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(3..=12);
    let n = rng.gen_range(1..=3);
    let pool_size = rng.gen_range(2..=m);
    let pool: Vec<ComplexPoint> = (0..pool_size)
        .map(|_| random_complex_point(&mut rng, n, 0.9))
        .collect();
    let pts: Vec<ComplexPoint> = (0..m)
        .map(|_| pool[rng.gen_range(0..pool_size)].clone())
        .collect();
    let table = EmbeddingTable::from_points(&pts).unwrap();

    let directed = rng.gen_bool(0.5);
    let density = rng.gen_range(0.1..0.5);
    let mut edges = Vec::new();
    for u in 0..m {
        for v in 0..m {
            if u != v && (directed || u < v) && rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    let graph = Graph::with_numeric_tokens(m, edges.clone(), directed).unwrap();
    let link = edges.len() >= 2 && rng.gen_bool(0.5);
    let (train, eval) = if link {
        let mut train = Vec::new();
        let mut eval = Vec::new();
        for &e in &edges {
            if rng.gen_bool(0.3) {
                eval.push(e);
            } else {
                train.push(e);
            }
        }
        if eval.is_empty() {
            eval.push(train.pop().unwrap());
        }
        (train, eval)
    } else {
        (Vec::new(), edges)
    };
    Instance {
        table,
        graph,
        eval,
        train,
        link,
        filtered: rng.gen_bool(0.5),
    }
}

/// MAP, MRR and Hits@N by brute force: for every evaluated node, every
/// neighbour is compared against every candidate. Ties count as closer.
pub fn oracle_metrics(inst: &Instance, ns: &[usize]) -> (f64, f64, Vec<f64>) {
    let m = inst.graph.num_nodes();
    let symmetric = !inst.graph.is_directed();
    let related = |edges: &[(usize, usize)], z: usize| -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &(u, v) in edges {
            if u == z {
                out.insert(v);
            }
            if symmetric && v == z {
                out.insert(u);
            }
        }
        out
    };
    let d = |a: usize, b: usize| distance(inst.table.point(a), inst.table.point(b)).unwrap();

    let (mut ap_sum, mut rr_sum, mut nodes) = (0.0, 0.0, 0usize);
    let mut hit_counts = vec![0usize; ns.len()];
    for z in 0..m {
        let truth = related(&inst.eval, z);
        if truth.is_empty() {
            continue;
        }
        let known = related(&inst.train, z);
        let pool: Vec<usize> = (0..m).filter(|&x| x != z && !known.contains(&x)).collect();
        let (mut ap, mut rr) = (0.0, 0.0);
        let mut best = usize::MAX;
        for &w in &truth {
            let dw = d(z, w);
            let closer = |x: &usize| *x != w && d(z, *x) <= dw;
            // Smallest prefix of the ranked list that contains `w`.
            let prefix = 1 + pool.iter().filter(|x| closer(x)).count();
            let truth_in_prefix = 1 + truth.iter().filter(|x| closer(x)).count();
            ap += truth_in_prefix as f64 / prefix as f64;
            let rank = if inst.filtered && !inst.link {
                1 + pool
                    .iter()
                    .filter(|x| !truth.contains(x) && closer(x))
                    .count()
            } else {
                prefix
            };
            rr += 1.0 / rank as f64;
            best = best.min(rank);
        }
        ap_sum += ap / truth.len() as f64;
        rr_sum += rr / truth.len() as f64;
        for (count, &n) in hit_counts.iter_mut().zip(ns) {
            if best <= n {
                *count += 1;
            }
        }
        nodes += 1;
    }
    let nodes = nodes as f64;
    (
        ap_sum / nodes,
        rr_sum / nodes,
        hit_counts.iter().map(|&c| c as f64 / nodes).collect(),
    )
}

/// Max absolute difference between the library report and the oracle over
/// `count` random instances.
pub fn metrics_max_error(count: u64, seed: u64) -> f64 {
    let ns = [1, 2, 3, 5, 10];
    let mut worst = 0.0f64;
    for i in 0..count {
        let inst = random_instance(seed.wrapping_mul(1000).wrapping_add(i));
        let report = cxhyp::evaluate(&inst.table, &inst.task(), &ns).unwrap();
        let (map, mrr, hits) = oracle_metrics(&inst, &ns);
        worst = worst
            .max((report.map - map).abs())
            .max((report.mrr - mrr).abs());
        for (&n, h) in ns.iter().zip(hits) {
            worst = worst.max((report.hits.get(n).unwrap() - h).abs());
        }
    }
    worst
}

/// A random DAG with exactly `edges` child→parent edges. Most nodes have one
/// parent; some have 2-5 and a few 6-10, so every default 1-N bucket up to
/// 6-10 is populated.
pub fn synthetic_taxonomy(edges: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut list = Vec::with_capacity(edges);
    let mut child = 1usize;
    while list.len() < edges {
        let roll: f64 = rng.gen();
        let want = if roll < 0.7 {
            1
        } else if roll < 0.95 {
            rng.gen_range(2..=5)
        } else {
            rng.gen_range(6..=10)
        };
        let want = want.min(child).min(edges - list.len());
        let parents = rand::seq::index::sample(&mut rng, child, want);
        list.extend(parents.iter().map(|p| (child, p)));
        child += 1;
    }
    let tokens = (0..child).map(|i| format!("t{i}")).collect();
    Graph::new(tokens, list, true).unwrap()
}
