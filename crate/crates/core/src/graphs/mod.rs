//! Graphs, edge-list I/O, generators, closure, splitting and δ-hyperbolicity.
//!
//! Edges are ordered pairs `(child, parent)`. A graph is either directed
//! (taxonomies, balanced trees) or undirected (compressed graphs), in which
//! case each edge is stored once with `u < v` and the relation is symmetric.

mod closure;
mod generate;
mod hyperbolicity;
mod split;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub use closure::transitive_closure;
pub use generate::{balanced_tree, compressed_graph, prufer_decode};
pub use hyperbolicity::{
    delta_hyperbolicity, delta_hyperbolicity_with_cap, four_point, DeltaMode, EXACT_NODE_CAP,
};
pub use split::{split_edges, EdgeSplit, SplitSpec};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    tokens: Vec<String>,
    edges: Vec<(usize, usize)>,
    directed: bool,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, deduplicating edges. Undirected edges are canonicalised
    /// to `u < v`.
    pub fn new(tokens: Vec<String>, edges: Vec<(usize, usize)>, directed: bool) -> Result<Self> {
        let m = tokens.len();
        let mut edges = edges;
        for e in edges.iter_mut() {
            for id in [e.0, e.1] {
                if id >= m {
                    return Err(Error::InvalidId { id, len: m });
                }
            }
            if e.0 == e.1 {
                return Err(Error::SelfLoop {
                    line: 0,
                    token: tokens[e.0].clone(),
                });
            }
            if !directed && e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut out_adj = vec![Vec::new(); m];
        let mut in_adj = vec![Vec::new(); m];
        for &(u, v) in &edges {
            out_adj[u].push(v);
            in_adj[v].push(u);
        }
        for list in in_adj.iter_mut() {
            list.sort_unstable();
        }
        Ok(Graph {
            tokens,
            edges,
            directed,
            out_adj,
            in_adj,
        })
    }

    /// Graph with tokens `"0".."m-1"`.
    pub fn with_numeric_tokens(
        m: usize,
        edges: Vec<(usize, usize)>,
        directed: bool,
    ) -> Result<Self> {
        Self::new((0..m).map(|i| i.to_string()).collect(), edges, directed)
    }

    pub fn num_nodes(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Same nodes and directedness, different edge set.
    pub fn with_edges(&self, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(self.tokens.clone(), edges, self.directed)
    }

    /// Whether `(a, b)` is in the relation (either orientation when undirected).
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out_adj[a].binary_search(&b).is_ok()
            || (!self.directed && self.in_adj[a].binary_search(&b).is_ok())
    }

    /// Relation neighbours of `u`: parents when directed, all adjacent nodes
    /// otherwise. Sorted.
    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        if self.directed {
            self.out_adj[u].clone()
        } else {
            merge_sorted(&self.out_adj[u], &self.in_adj[u])
        }
    }

    pub fn parents(&self, u: usize) -> &[usize] {
        &self.out_adj[u]
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.in_adj[u]
    }

    /// Number of relation neighbours of every node.
    pub fn parent_counts(&self) -> Vec<usize> {
        (0..self.num_nodes())
            .map(|u| {
                if self.directed {
                    self.out_adj[u].len()
                } else {
                    self.out_adj[u].len() + self.in_adj[u].len()
                }
            })
            .collect()
    }

    /// Adjacency of the undirected view, sorted.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.num_nodes())
            .map(|u| merge_sorted(&self.out_adj[u], &self.in_adj[u]))
            .collect()
    }

    /// Training positives: every edge, plus its reverse when undirected.
    pub fn positive_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = self.edges.clone();
        if !self.directed {
            pairs.extend(self.edges.iter().map(|&(u, v)| (v, u)));
        }
        pairs
    }

    pub fn token_index(&self) -> HashMap<&str, usize> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }

    /// Writes the edge list as `child\tparent` lines.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{}\t{}", self.tokens[u], self.tokens[v])?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_edge_list(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

/// Interns tokens in first-appearance order.
#[derive(Debug, Default)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, index }
    }

    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

/// Parses `child\tparent` lines. Blank lines and `#` comments are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<Graph> {
    let mut vocab = Vocab::default();
    let edges = parse_edges_into(reader, &mut vocab, true)?;
    Graph::new(vocab.into_tokens(), edges, directed)
}

/// Parses edges against an existing vocabulary. With `extend = false`, an
/// unknown token is an error.
pub fn parse_edges_into<R: BufRead>(
    reader: R,
    vocab: &mut Vocab,
    extend: bool,
) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected two tab-separated tokens, got {line:?}"),
            });
        }
        if fields[0] == fields[1] {
            return Err(Error::SelfLoop {
                line: line_no,
                token: fields[0].to_owned(),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, token) in ids.iter_mut().zip(&fields) {
            *slot = if extend {
                vocab.intern(token)
            } else {
                vocab.get(token).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unknown token {token:?}"),
                })?
            };
        }
        edges.push((ids[0], ids[1]));
    }
    Ok(edges)
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    parse_edge_list(BufReader::new(file), directed)
}
