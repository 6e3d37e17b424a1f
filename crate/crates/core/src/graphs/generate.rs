use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Balanced tree with branching factor `r` and depth `h`, nodes in BFS order
/// (root is 0, children of `i` are `r·i + 1 ..= r·i + r`). Edges point from
/// child to parent.
pub fn balanced_tree(r: usize, h: usize) -> Result<Graph> {
    if r < 2 || h < 1 {
        return Err(Error::Config(format!(
            "balanced tree needs r >= 2 and h >= 1 (got r={r}, h={h})"
        )));
    }
    let mut m = 0usize;
    let mut level = 1usize;
    for _ in 0..=h {
        m += level;
        level *= r;
    }
    let edges = (1..m).map(|c| (c, (c - 1) / r)).collect();
    Graph::with_numeric_tokens(m, edges, true)
}

/// Decodes a Prüfer sequence over `0..m` (length `m − 2`) into tree edges.
pub fn prufer_decode(seq: &[usize], m: usize) -> Vec<(usize, usize)> {
    assert!(m >= 2 && seq.len() == m - 2);
    let mut degree = vec![1usize; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..m).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(m - 1);
    for &s in seq {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().unwrap();
    let Reverse(b) = leaves.pop().unwrap();
    edges.push((a, b));
    edges
}

/// Union of `k` uniform random labelled trees on nodes `0..m`. Undirected.
pub fn compressed_graph(m: usize, k: usize, seed: u64) -> Result<Graph> {
    if m < 2 || k < 1 {
        return Err(Error::Config(format!(
            "compressed graph needs m >= 2 and k >= 1 (got m={m}, k={k})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(k * (m - 1));
    for _ in 0..k {
        let seq: Vec<usize> = (0..m - 2).map(|_| rng.gen_range(0..m)).collect();
        edges.extend(prufer_decode(&seq, m));
    }
    Graph::with_numeric_tokens(m, edges, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_tree_sizes() {
        let g = balanced_tree(2, 2).unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (7, 6));
        assert_eq!(balanced_tree(10, 2).unwrap().num_nodes(), 111);
        for r in [2usize, 3, 10] {
            for h in 1u32..=3 {
                let g = balanced_tree(r, h as usize).unwrap();
                let expected: usize = (0..=h).map(|i| r.pow(i)).sum();
                assert_eq!(g.num_nodes(), expected);
                assert_eq!(g.num_edges(), expected - 1);
            }
        }
        assert!(balanced_tree(1, 2).is_err());
        assert!(balanced_tree(2, 0).is_err());
    }

    #[test]
    fn balanced_tree_has_one_parent_per_child() {
        let g = balanced_tree(3, 3).unwrap();
        assert!(g.parents(0).is_empty());
        for c in 1..g.num_nodes() {
            assert_eq!(g.parents(c).len(), 1);
        }
    }

    #[test]
    fn prufer_known_sequence() {
        // Classic example: sequence [3, 3, 3, 4] on 6 nodes.
        let mut e = prufer_decode(&[3, 3, 3, 4], 6);
        for x in e.iter_mut() {
            if x.0 > x.1 {
                *x = (x.1, x.0);
            }
        }
        e.sort();
        assert_eq!(e, vec![(0, 3), (1, 3), (2, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn single_tree_is_spanning() {
        for seed in 0..20 {
            let g = compressed_graph(30, 1, seed).unwrap();
            assert_eq!(g.num_edges(), 29);
            // Connected: BFS reaches everything.
            let adj = g.undirected_adjacency();
            let mut seen = [false; 30];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn compressed_graph_edge_bound_and_determinism() {
        let g = compressed_graph(50, 4, 9).unwrap();
        assert!(g.num_edges() <= 4 * 49);
        assert!(g.num_edges() > 49);
        assert_eq!(g, compressed_graph(50, 4, 9).unwrap());
        assert!(g.edges().iter().all(|&(u, v)| u < v));
        assert_eq!(compressed_graph(2, 3, 0).unwrap().num_edges(), 1);
    }
}
