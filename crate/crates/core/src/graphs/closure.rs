use super::Graph;
use crate::error::{Error, Result};

/// Returns the graph whose edges are all reachability pairs `(u, v)`, `u ≠ v`,
/// following edge direction. Fails with the offending cycle if `g` is not a DAG.
pub fn transitive_closure(g: &Graph) -> Result<Graph> {
    if !g.is_directed() {
        return Err(Error::Config(
            "transitive closure is defined for directed graphs".into(),
        ));
    }
    if let Some(cycle) = find_cycle(g) {
        return Err(Error::Cycle(
            cycle.into_iter().map(|u| g.tokens()[u].clone()).collect(),
        ));
    }
    let m = g.num_nodes();
    let mut stamp = vec![usize::MAX; m];
    let mut stack = Vec::new();
    let mut edges = Vec::new();
    for src in 0..m {
        stamp[src] = src;
        stack.extend_from_slice(g.parents(src));
        while let Some(u) = stack.pop() {
            if stamp[u] == src {
                continue;
            }
            stamp[u] = src;
            edges.push((src, u));
            stack.extend(g.parents(u).iter().filter(|&&v| stamp[v] != src));
        }
    }
    g.with_edges(edges)
}

/// Iterative three-colour DFS. Returns one cycle as a node sequence that
/// starts and ends at the same node.
fn find_cycle(g: &Graph) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let m = g.num_nodes();
    let mut colour = vec![WHITE; m];
    // (node, next child index)
    let mut path: Vec<(usize, usize)> = Vec::new();
    for root in 0..m {
        if colour[root] != WHITE {
            continue;
        }
        colour[root] = GREY;
        path.push((root, 0));
        while let Some(&mut (u, ref mut next)) = path.last_mut() {
            let parents = g.parents(u);
            if *next < parents.len() {
                let v = parents[*next];
                *next += 1;
                match colour[v] {
                    WHITE => {
                        colour[v] = GREY;
                        path.push((v, 0));
                    }
                    GREY => {
                        let start = path.iter().position(|&(x, _)| x == v).unwrap();
                        let mut cycle: Vec<usize> = path[start..].iter().map(|&(x, _)| x).collect();
                        cycle.push(v);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                colour[u] = BLACK;
                path.pop();
            }
        }
    }
    None
}
