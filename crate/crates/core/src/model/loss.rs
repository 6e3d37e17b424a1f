use rand::Rng;

use super::{Embeddings, Manifold};
use crate::error::{Error, Result};
use crate::graphs::Graph;

/// One positive pair with its denominator set.
///
/// The denominator holds the sampled `negative_ids` plus, depending on the
/// flags, the zero-distance self term `p` and the positive `q`.
/// [`LossBatch::new`] gives the self-term form: self term in, positive out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossBatch {
    pub positive: (usize, usize),
    /// Sampled non-neighbours of `p`.
    pub negative_ids: Vec<usize>,
    pub self_in_denominator: bool,
    pub positive_in_denominator: bool,
}

impl LossBatch {
    pub fn new(p: usize, q: usize, negatives: impl IntoIterator<Item = usize>) -> Self {
        LossBatch {
            positive: (p, q),
            negative_ids: negatives.into_iter().collect(),
            self_in_denominator: true,
            positive_in_denominator: false,
        }
    }

    /// Sets which of `p` and `q` join the denominator.
    pub fn with_denominator(mut self, self_term: bool, positive: bool) -> Self {
        self.self_in_denominator = self_term;
        self.positive_in_denominator = positive;
        self
    }

    /// Checks that every negative is a non-neighbour of `p` distinct from
    /// `p` and `q`.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let (p, q) = self.positive;
        let m = graph.num_nodes();
        for id in [p, q].into_iter().chain(self.negative_ids.iter().copied()) {
            if id >= m {
                return Err(Error::InvalidId { id, len: m });
            }
        }
        for &k in &self.negative_ids {
            if k == q {
                return Err(Error::Config(format!(
                    "positive {q} listed as a negative of {p}"
                )));
            }
            if k == p || graph.has_edge(p, k) {
                return Err(Error::Config(format!("negative {k} is a neighbour of {p}")));
            }
        }
        Ok(())
    }

    fn check_ids(&self, rows: usize) -> Result<()> {
        if !self.self_in_denominator
            && !self.positive_in_denominator
            && self.negative_ids.is_empty()
        {
            return Err(Error::Config("empty loss denominator".into()));
        }
        let (p, q) = self.positive;
        for id in [p, q].into_iter().chain(self.negative_ids.iter().copied()) {
            if id >= rows {
                return Err(Error::InvalidId { id, len: rows });
            }
        }
        Ok(())
    }
}

/// Coefficients `∂loss/∂d` for the positive and each denominator member.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPartials {
    pub positive: f64,
    pub denominator: Vec<f64>,
}

/// `loss = d_pq + log Σ_k exp(−d_pk)`, computed stably. Returns the loss and
/// the softmax weights of the denominator members (and of `q` when it is
/// included).
fn loss_and_softmax(d_pq: f64, denom: &[f64], with_positive: bool) -> (f64, Vec<f64>, f64) {
    let min = denom
        .iter()
        .copied()
        .chain(with_positive.then_some(d_pq))
        .fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = denom.iter().map(|d| (min - d).exp()).collect();
    let w_pos = if with_positive {
        (min - d_pq).exp()
    } else {
        0.0
    };
    let total: f64 = weights.iter().sum::<f64>() + w_pos;
    weights.iter_mut().for_each(|w| *w /= total);
    let loss = d_pq - min + total.ln();
    (loss, weights, w_pos / total)
}

/// `∂loss/∂d` for the positive distance and every denominator distance.
///
/// Denominator coefficients are `−softmax`; with the positive included in the
/// denominator its own share is subtracted from the positive coefficient.
pub fn loss_distance_partials(
    positive_distance: f64,
    denominator_distances: &[f64],
    positive_in_denominator: bool,
) -> LossPartials {
    let (_, weights, pos_share) = loss_and_softmax(
        positive_distance,
        denominator_distances,
        positive_in_denominator,
    );
    LossPartials {
        positive: 1.0 - pos_share,
        denominator: weights.into_iter().map(|w| -w).collect(),
    }
}

/// Negative log-softmax of the positive pair against its denominator set.
pub fn soft_ranking_loss<M: Manifold>(table: &Embeddings<M>, batch: &LossBatch) -> Result<f64> {
    batch.check_ids(table.num_rows())?;
    let (p, q) = batch.positive;
    let m = table.manifold();
    let d_pq = m.distance(table.row(p), table.row(q));
    let mut denom: Vec<f64> = batch
        .negative_ids
        .iter()
        .map(|&k| m.distance(table.row(p), table.row(k)))
        .collect();
    if batch.self_in_denominator {
        denom.push(0.0);
    }
    Ok(loss_and_softmax(d_pq, &denom, batch.positive_in_denominator).0)
}

/// Accumulates the Euclidean loss gradient of one batch.
///
/// `slot_of(id)` maps a node id to its row in `grads`; `row_of(id)` yields the
/// node's current coordinates. Returns the batch loss.
pub(crate) fn accumulate_batch<'a, M, R, S>(
    manifold: &M,
    batch: &LossBatch,
    row_of: R,
    mut slot_of: S,
    grads: &mut [f64],
    dists: &mut Vec<f64>,
) -> f64
where
    M: Manifold,
    R: Fn(usize) -> &'a [f64],
    S: FnMut(usize) -> usize,
{
    let len = manifold.row_len();
    let (p, q) = batch.positive;
    let zp = row_of(p);
    let zq = row_of(q);
    let d_pq = manifold.distance(zp, zq);
    dists.clear();
    dists.extend(
        batch
            .negative_ids
            .iter()
            .map(|&k| manifold.distance(zp, row_of(k))),
    );
    if batch.self_in_denominator {
        // d(p, p) = 0 has no gradient; it only enters the normaliser.
        dists.push(0.0);
    }
    if dists.is_empty() && !batch.positive_in_denominator {
        return 0.0;
    }
    let (loss, weights, pos_share) = loss_and_softmax(d_pq, dists, batch.positive_in_denominator);

    let sp = slot_of(p);
    let sq = slot_of(q);
    let coef_pos = 1.0 - pos_share;
    if p != q {
        let (gp, gq) = two_rows(grads, sp, sq, len);
        manifold.add_distance_grad(zp, zq, coef_pos, gp);
        manifold.add_distance_grad(zq, zp, coef_pos, gq);
    }
    for (&k, &w) in batch.negative_ids.iter().zip(&weights) {
        if k == p {
            continue;
        }
        let zk = row_of(k);
        let sk = slot_of(k);
        let (gp, gk) = two_rows(grads, sp, sk, len);
        manifold.add_distance_grad(zp, zk, -w, gp);
        manifold.add_distance_grad(zk, zp, -w, gk);
    }
    loss
}

fn two_rows(buf: &mut [f64], a: usize, b: usize, len: usize) -> (&mut [f64], &mut [f64]) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = buf.split_at_mut(b * len);
        (&mut lo[a * len..(a + 1) * len], &mut hi[..len])
    } else {
        let (lo, hi) = buf.split_at_mut(a * len);
        (&mut hi[..len], &mut lo[b * len..(b + 1) * len])
    }
}

/// `(node, gradient row)` pairs.
pub type RowGradients = Vec<(usize, Vec<f64>)>;

/// Euclidean gradient of [`soft_ranking_loss`] with respect to every node the
/// batch touches, as `(node, gradient row)` pairs in first-touch order.
pub fn batch_gradient<M: Manifold>(
    table: &Embeddings<M>,
    batch: &LossBatch,
) -> Result<(f64, RowGradients)> {
    batch.check_ids(table.num_rows())?;
    let len = table.manifold().row_len();
    let mut ids: Vec<usize> = Vec::new();
    let (p, q) = batch.positive;
    for id in [p, q].into_iter().chain(batch.negative_ids.iter().copied()) {
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let mut grads = vec![0.0; ids.len() * len];
    let mut dists = Vec::new();
    let loss = accumulate_batch(
        table.manifold(),
        batch,
        |id| table.row(id),
        |id| ids.iter().position(|&x| x == id).unwrap(),
        &mut grads,
        &mut dists,
    );
    let out = ids
        .iter()
        .enumerate()
        .map(|(s, &id)| (id, grads[s * len..(s + 1) * len].to_vec()))
        .collect();
    Ok((loss, out))
}

/// Uniform negative sampler over non-neighbours, with rejection.
#[derive(Debug)]
pub struct NegativeSampler<'g> {
    graph: &'g Graph,
    /// Explicit non-neighbour lists for nodes where rejection would be slow.
    dense: Vec<Option<Vec<usize>>>,
}

impl<'g> NegativeSampler<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let m = graph.num_nodes();
        let dense = (0..m)
            .map(|p| {
                let neighbours = graph.neighbors(p);
                let free = m - 1 - neighbours.len();
                // Rejection needs ~m/free draws per sample.
                (free * 4 < m).then(|| {
                    (0..m)
                        .filter(|&k| k != p && neighbours.binary_search(&k).is_err())
                        .collect()
                })
            })
            .collect();
        NegativeSampler { graph, dense }
    }

    /// Draws `count` negatives (with replacement) for the positive `(p, q)`,
    /// in the self-term form of [`LossBatch::new`]. Nodes with no non-neighbours
    /// get none.
    pub fn sample(&self, p: usize, q: usize, count: usize, rng: &mut impl Rng) -> LossBatch {
        let m = self.graph.num_nodes();
        let mut negatives = Vec::with_capacity(count);
        match &self.dense[p] {
            Some(list) => {
                let list: Vec<usize> = list.iter().copied().filter(|&k| k != q).collect();
                if !list.is_empty() {
                    negatives.extend((0..count).map(|_| list[rng.gen_range(0..list.len())]));
                }
            }
            None => {
                while negatives.len() < count {
                    let k = rng.gen_range(0..m);
                    if k != p && k != q && !self.graph.has_edge(p, k) {
                        negatives.push(k);
                    }
                }
            }
        }
        LossBatch::new(p, q, negatives)
    }
}
