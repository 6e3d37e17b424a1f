use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

const SPLIT_ATTEMPTS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.90,
            valid_frac: 0.05,
            test_frac: 0.05,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.valid_frac, self.test_frac];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) || self.train_frac <= 0.0 {
            return Err(Error::Config(format!("invalid split fractions {fracs:?}")));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {fracs:?} must sum to 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train: Vec<(usize, usize)>,
    pub valid: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
}

/// Randomly partitions the edges so that both endpoints of every held-out
/// edge keep at least one training edge.
///
/// Edges are visited in shuffled order and moved to the held-out pool only if
/// neither endpoint would lose its last training edge. If the pool comes up
/// short, the shuffle is retried with a derived seed a bounded number of times.
pub fn split_edges(g: &Graph, spec: &SplitSpec) -> Result<EdgeSplit> {
    spec.validate()?;
    let total = g.num_edges();
    let n_valid = (spec.valid_frac * total as f64).round() as usize;
    let n_test = (spec.test_frac * total as f64).round() as usize;
    let held_out = (n_valid + n_test).min(total);

    for attempt in 0..SPLIT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed
                .wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut rng);

        let mut degree = vec![0usize; g.num_nodes()];
        for &(u, v) in g.edges() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut held = Vec::with_capacity(held_out);
        let mut in_train = vec![true; total];
        for &e in &order {
            if held.len() == held_out {
                break;
            }
            let (u, v) = g.edges()[e];
            if degree[u] > 1 && degree[v] > 1 {
                degree[u] -= 1;
                degree[v] -= 1;
                in_train[e] = false;
                held.push(e);
            }
        }
        if held.len() < held_out {
            continue;
        }
        let pick = |ids: &[usize]| {
            let mut out: Vec<(usize, usize)> = ids.iter().map(|&e| g.edges()[e]).collect();
            out.sort_unstable();
            out
        };
        let n_valid = n_valid.min(held.len());
        let valid = pick(&held[..n_valid]);
        let test = pick(&held[n_valid..]);
        let train = g
            .edges()
            .iter()
            .zip(&in_train)
            .filter(|(_, &keep)| keep)
            .map(|(&e, _)| e)
            .collect();
        return Ok(EdgeSplit { train, valid, test });
    }
    Err(Error::SplitUnsatisfiable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{compressed_graph, transitive_closure};

    fn check_constraint(g: &Graph, s: &EdgeSplit) {
        let mut in_train = vec![false; g.num_nodes()];
        for &(u, v) in &s.train {
            in_train[u] = true;
            in_train[v] = true;
        }
        for &(u, v) in s.valid.iter().chain(&s.test) {
            assert!(in_train[u] && in_train[v]);
        }
        let mut all: Vec<_> = s
            .train
            .iter()
            .chain(&s.valid)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, g.edges());
    }

    #[test]
    fn everything_in_train() {
        let g = compressed_graph(20, 2, 1).unwrap();
        let spec = SplitSpec {
            train_frac: 1.0,
            valid_frac: 0.0,
            test_frac: 0.0,
            seed: 3,
        };
        let s = split_edges(&g, &spec).unwrap();
        assert_eq!(s.train, g.edges());
        assert!(s.valid.is_empty() && s.test.is_empty());
    }

    #[test]
    fn default_split_sizes_and_constraint() {
        let g = compressed_graph(200, 6, 5).unwrap();
        let g = g
            .with_edges(g.edges()[..1000.min(g.num_edges())].to_vec())
            .unwrap();
        assert_eq!(g.num_edges(), 1000);
        let s = split_edges(&g, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (900, 50, 50));
        check_constraint(&g, &s);
        assert_eq!(s, split_edges(&g, &SplitSpec::default()).unwrap());
    }

    #[test]
    fn closure_split_satisfies_constraint() {
        let tree = crate::graphs::balanced_tree(3, 4).unwrap();
        let g = transitive_closure(&tree).unwrap();
        let s = split_edges(
            &g,
            &SplitSpec {
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        check_constraint(&g, &s);
    }

    #[test]
    fn star_cannot_hold_out_edges() {
        let g = Graph::with_numeric_tokens(5, vec![(1, 0), (2, 0), (3, 0), (4, 0)], true).unwrap();
        let spec = SplitSpec {
            train_frac: 0.5,
            valid_frac: 0.25,
            test_frac: 0.25,
            seed: 0,
        };
        assert!(matches!(
            split_edges(&g, &spec),
            Err(Error::SplitUnsatisfiable)
        ));
    }

    #[test]
    fn bad_fractions_rejected() {
        let g = compressed_graph(10, 2, 0).unwrap();
        let spec = SplitSpec {
            train_frac: 0.5,
            valid_frac: 0.1,
            test_frac: 0.1,
            seed: 0,
        };
        assert!(matches!(split_edges(&g, &spec), Err(Error::Config(_))));
    }
}
