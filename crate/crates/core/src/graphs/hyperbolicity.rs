use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Largest graph for which exact (all 4-subsets) δ is computed.
pub const EXACT_NODE_CAP: usize = 1500;

/// Above this size the sampled mode runs BFS per tuple instead of building
/// the full distance matrix.
const MATRIX_LIMIT: usize = 4000;

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Exact,
    Sampled { count: usize, seed: u64 },
}

/// `M1 − M2` for the three pair sums of a 4-tuple.
pub fn four_point(dab: u32, dcd: u32, dac: u32, dbd: u32, dad: u32, dbc: u32) -> u32 {
    let s1 = dab + dcd;
    let s2 = dac + dbd;
    let s3 = dad + dbc;
    let (hi, mid) = if s1 >= s2 { (s1, s2) } else { (s2, s1) };
    if s3 >= hi {
        s3 - hi
    } else if s3 >= mid {
        hi - s3
    } else {
        hi - mid
    }
}

fn bfs(adj: &[Vec<usize>], src: usize, dist: &mut [u32]) {
    dist.fill(UNREACHABLE);
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in &adj[u] {
            if dist[v] == UNREACHABLE {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
}

fn distance_matrix(adj: &[Vec<usize>]) -> Vec<u32> {
    let m = adj.len();
    let mut mat = vec![0u32; m * m];
    mat.par_chunks_mut(m.max(1))
        .enumerate()
        .for_each(|(src, row)| bfs(adj, src, row));
    mat
}

/// Gromov δ over the undirected shortest-path metric, with the default node
/// cap for exact mode.
pub fn delta_hyperbolicity(g: &Graph, mode: DeltaMode) -> Result<f64> {
    delta_hyperbolicity_with_cap(g, mode, EXACT_NODE_CAP)
}

pub fn delta_hyperbolicity_with_cap(g: &Graph, mode: DeltaMode, cap: usize) -> Result<f64> {
    let m = g.num_nodes();
    let adj = g.undirected_adjacency();
    match mode {
        DeltaMode::Exact => {
            if m > cap {
                return Err(Error::NodeCapExceeded { nodes: m, cap });
            }
            if m < 4 {
                return Ok(0.0);
            }
            let d = distance_matrix(&adj);
            if d.contains(&UNREACHABLE) {
                return Err(Error::Disconnected);
            }
            Ok(exact_from_matrix(&d, m) as f64 / 2.0)
        }
        DeltaMode::Sampled { count, seed } => {
            Ok(sampled(&adj, count, seed, MATRIX_LIMIT) as f64 / 2.0)
        }
    }
}

fn exact_from_matrix(d: &[u32], m: usize) -> u32 {
    (0..m)
        .into_par_iter()
        .map(|a| {
            let ra = &d[a * m..(a + 1) * m];
            let mut best = 0;
            for b in a + 1..m {
                let rb = &d[b * m..(b + 1) * m];
                let dab = ra[b];
                for c in b + 1..m {
                    let rc = &d[c * m..(c + 1) * m];
                    let (dac, dbc) = (ra[c], rb[c]);
                    for dd in c + 1..m {
                        let h = four_point(dab, rc[dd], dac, rb[dd], ra[dd], dbc);
                        best = best.max(h);
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0)
}

/// Lower bound from `count` random 4-tuples of distinct nodes. Tuples that
/// straddle components are redrawn, up to a bounded number of attempts.
fn sampled(adj: &[Vec<usize>], count: usize, seed: u64, matrix_limit: usize) -> u32 {
    let m = adj.len();
    if m < 4 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = (m <= matrix_limit).then(|| distance_matrix(adj));
    let mut rows = vec![vec![0u32; m]; 3];
    let mut best = 0;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < count && attempts < count.saturating_mul(20).max(100) {
        attempts += 1;
        let mut t = [0usize; 4];
        for i in 0..4 {
            t[i] = loop {
                let x = rng.gen_range(0..m);
                if !t[..i].contains(&x) {
                    break x;
                }
            };
        }
        let [a, b, c, d] = t;
        let dist = |x: usize, y: usize, rows: &[Vec<u32>]| match &matrix {
            Some(mat) => mat[x * m + y],
            None => {
                let slot = [a, b, c].iter().position(|&s| s == x).unwrap();
                rows[slot][y]
            }
        };
        if matrix.is_none() {
            for (slot, &src) in [a, b, c].iter().enumerate() {
                bfs(adj, src, &mut rows[slot]);
            }
        }
        let ds = [
            dist(a, b, &rows),
            dist(c, d, &rows),
            dist(a, c, &rows),
            dist(b, d, &rows),
            dist(a, d, &rows),
            dist(b, c, &rows),
        ];
        if ds.contains(&UNREACHABLE) {
            continue;
        }
        accepted += 1;
        best = best.max(four_point(ds[0], ds[1], ds[2], ds[3], ds[4], ds[5]));
    }
    best
}
