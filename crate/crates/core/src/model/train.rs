use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{accumulate_batch, LossBatch, NegativeSampler};
use super::{project_row, Embeddings, Manifold, UnitBall};
use crate::error::{Error, Result};
use crate::geometry::MetricMode;
use crate::graphs::Graph;

/// Optimiser hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Complex dimension `n` (the Poincaré baseline uses `2n` real coordinates).
    pub dim: usize,
    pub epochs: usize,
    /// Peak learning rate.
    pub lr: f64,
    pub burnin_epochs: usize,
    /// Burn-in epochs run at `lr / burnin_factor`.
    pub burnin_factor: f64,
    /// Negatives sampled per positive, not counting the self term.
    pub negatives: usize,
    pub eps_proj: f64,
    pub metric_mode: MetricMode,
    pub seed: u64,
    /// Positives per update.
    pub batch_size: usize,
    /// Put the positive `q` in the softmax denominator.
    pub include_positive_in_denominator: bool,
    /// Put the zero-distance self term `p` in the softmax denominator.
    pub self_in_denominator: bool,
    /// 1 = deterministic single worker; more = lock-free parallel updates.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 10,
            epochs: 300,
            lr: 0.5,
            burnin_epochs: 10,
            burnin_factor: 10.0,
            negatives: 50,
            eps_proj: 1e-5,
            metric_mode: MetricMode::Conformal,
            seed: 0,
            batch_size: 1,
            include_positive_in_denominator: true,
            self_in_denominator: false,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.negatives < 1 {
            return bad("negatives must be at least 1");
        }
        if !(self.eps_proj > 0.0 && self.eps_proj < 0.1) {
            return bad("eps_proj must lie in (0, 0.1)");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.workers < 1 {
            return bad("workers must be at least 1");
        }
        if !(self.burnin_factor > 0.0 && self.burnin_factor.is_finite()) {
            return bad("burnin_factor must be positive");
        }
        Ok(())
    }

    /// Self-term denominator: sampled negatives plus the zero-distance self
    /// term, without the positive.
    pub fn with_self_term_denominator(mut self) -> Self {
        self.self_in_denominator = true;
        self.include_positive_in_denominator = false;
        self
    }

    /// Learning rate used in `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch < self.burnin_epochs {
            self.lr / self.burnin_factor
        } else {
            self.lr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput<M> {
    pub table: Embeddings<M>,
    pub trace: Vec<EpochStats>,
}

trait RowStore {
    fn read_row(&self, i: usize, out: &mut [f64]);
    fn write_row(&mut self, i: usize, row: &[f64]);
}

struct SliceStore<'a> {
    data: &'a mut [f64],
    len: usize,
}

impl RowStore for SliceStore<'_> {
    fn read_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.data[i * self.len..(i + 1) * self.len]);
    }

    fn write_row(&mut self, i: usize, row: &[f64]) {
        self.data[i * self.len..(i + 1) * self.len].copy_from_slice(row);
    }
}

/// Shared table for lock-free parallel updates. Reads may observe rows that
/// are partially overwritten by another worker.
struct AtomicStore<'a> {
    data: &'a [AtomicU64],
    len: usize,
}

impl RowStore for AtomicStore<'_> {
    fn read_row(&self, i: usize, out: &mut [f64]) {
        for (o, a) in out
            .iter_mut()
            .zip(&self.data[i * self.len..(i + 1) * self.len])
        {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn write_row(&mut self, i: usize, row: &[f64]) {
        for (a, v) in self.data[i * self.len..(i + 1) * self.len].iter().zip(row) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Scratch buffers reused across steps.
struct Workspace {
    len: usize,
    ids: Vec<usize>,
    slot: Vec<usize>,
    rows: Vec<f64>,
    grads: Vec<f64>,
    dists: Vec<f64>,
}

impl Workspace {
    fn new(m: usize, len: usize) -> Self {
        Workspace {
            len,
            ids: Vec::new(),
            slot: vec![usize::MAX; m],
            rows: Vec::new(),
            grads: Vec::new(),
            dists: Vec::new(),
        }
    }

    fn touch(&mut self, id: usize, store: &impl RowStore) {
        if self.slot[id] != usize::MAX {
            return;
        }
        self.slot[id] = self.ids.len();
        self.ids.push(id);
        let start = self.rows.len();
        self.rows.resize(start + self.len, 0.0);
        store.read_row(id, &mut self.rows[start..]);
    }

    fn reset(&mut self) {
        for &id in &self.ids {
            self.slot[id] = usize::MAX;
        }
        self.ids.clear();
        self.rows.clear();
    }
}

struct StepParams {
    lr: f64,
    mode: MetricMode,
    eps: f64,
}

/// Computes all gradients at the current rows, then rescales, steps and
/// projects every touched row. Returns the summed batch loss.
fn apply_step<M: Manifold>(
    manifold: &M,
    store: &mut impl RowStore,
    batches: &[LossBatch],
    params: &StepParams,
    ws: &mut Workspace,
) -> f64 {
    for b in batches {
        ws.touch(b.positive.0, store);
        ws.touch(b.positive.1, store);
        for &k in &b.negative_ids {
            ws.touch(k, store);
        }
    }
    let len = ws.len;
    ws.grads.clear();
    ws.grads.resize(ws.rows.len(), 0.0);

    let mut loss = 0.0;
    {
        let Workspace {
            rows,
            slot,
            grads,
            dists,
            ..
        } = ws;
        let rows: &[f64] = rows;
        let slot: &[usize] = slot;
        for b in batches {
            loss += accumulate_batch(
                manifold,
                b,
                |id| &rows[slot[id] * len..(slot[id] + 1) * len],
                |id| slot[id],
                grads,
                dists,
            );
        }
    }

    for (s, &id) in ws.ids.iter().enumerate() {
        let row = &mut ws.rows[s * len..(s + 1) * len];
        let grad = &mut ws.grads[s * len..(s + 1) * len];
        if grad.iter().any(|g| !g.is_finite()) {
            continue;
        }
        manifold.rescale(row, grad, params.mode);
        for (r, g) in row.iter_mut().zip(grad.iter()) {
            *r -= params.lr * g;
        }
        project_row(row, params.eps);
        store.write_row(id, row);
    }
    ws.reset();
    loss
}

/// One RSGD update over `batches`, evaluated at the current table.
/// Returns the summed loss before the update.
pub fn rsgd_step<M: Manifold>(
    table: &mut Embeddings<M>,
    batches: &[LossBatch],
    lr: f64,
    config: &TrainConfig,
) -> Result<f64> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Config("lr must be nonnegative".into()));
    }
    let rows = table.num_rows();
    for b in batches {
        let (p, q) = b.positive;
        for id in [p, q].into_iter().chain(b.negative_ids.iter().copied()) {
            if id >= rows {
                return Err(Error::InvalidId { id, len: rows });
            }
        }
    }
    let manifold = table.manifold().clone();
    let len = manifold.row_len();
    let mut ws = Workspace::new(rows, len);
    let mut store = SliceStore {
        data: table.data_mut(),
        len,
    };
    let params = StepParams {
        lr,
        mode: config.metric_mode,
        eps: config.eps_proj,
    };
    Ok(apply_step(&manifold, &mut store, batches, &params, &mut ws))
}

fn sample_batches(
    sampler: &NegativeSampler,
    chunk: &[(usize, usize)],
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Vec<LossBatch> {
    chunk
        .iter()
        .map(|&(p, q)| {
            sampler
                .sample(p, q, config.negatives, rng)
                .with_denominator(
                    config.self_in_denominator,
                    config.include_positive_in_denominator,
                )
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_shard<M: Manifold>(
    manifold: &M,
    store: &mut impl RowStore,
    sampler: &NegativeSampler,
    shard: &[(usize, usize)],
    config: &TrainConfig,
    params: &StepParams,
    rng: &mut impl Rng,
    ws: &mut Workspace,
) -> f64 {
    let mut loss = 0.0;
    for chunk in shard.chunks(config.batch_size) {
        let batches = sample_batches(sampler, chunk, config, rng);
        loss += apply_step(manifold, store, &batches, params, ws);
    }
    loss
}

/// Projected RSGD on the complex unit ball of dimension `config.dim`.
pub fn train(graph: &Graph, config: &TrainConfig) -> Result<TrainOutput<UnitBall>> {
    train_manifold(graph, config, UnitBall::new(config.dim)?)
}

/// Projected RSGD on an arbitrary manifold.
///
/// The seed drives, in order: initialisation, then per epoch the edge shuffle
/// and negative sampling. With `workers > 1` each worker gets its own stream
/// derived from the main one and results are not reproducible.
pub fn train_manifold<M: Manifold>(
    graph: &Graph,
    config: &TrainConfig,
    manifold: M,
) -> Result<TrainOutput<M>> {
    config.validate()?;
    if graph.num_edges() == 0 {
        return Err(Error::NoEdges);
    }
    let m = graph.num_nodes();
    let len = manifold.row_len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = Embeddings::init(manifold.clone(), m, &mut rng);
    let sampler = NegativeSampler::new(graph);
    let mut positives = graph.positive_pairs();
    let mut trace = Vec::with_capacity(config.epochs);

    let shared: Option<Vec<AtomicU64>> = (config.workers > 1).then(|| {
        table
            .data()
            .iter()
            .map(|v| AtomicU64::new(v.to_bits()))
            .collect()
    });
    let mut ws = Workspace::new(m, len);

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let params = StepParams {
            lr: config.lr_at(epoch),
            mode: config.metric_mode,
            eps: config.eps_proj,
        };
        positives.shuffle(&mut rng);
        let loss = match &shared {
            None => {
                let mut store = SliceStore {
                    data: table.data_mut(),
                    len,
                };
                run_shard(
                    &manifold, &mut store, &sampler, &positives, config, &params, &mut rng, &mut ws,
                )
            }
            Some(data) => {
                let shard_len = positives.len().div_ceil(config.workers);
                let seeds: Vec<u64> = (0..config.workers).map(|_| rng.gen()).collect();
                let loss = std::thread::scope(|scope| {
                    let handles: Vec<_> = positives
                        .chunks(shard_len)
                        .zip(&seeds)
                        .map(|(shard, &seed)| {
                            let (manifold, sampler, params) = (&manifold, &sampler, &params);
                            scope.spawn(move || {
                                let mut store = AtomicStore { data, len };
                                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                                let mut ws = Workspace::new(m, len);
                                run_shard(
                                    manifold, &mut store, sampler, shard, config, params, &mut rng,
                                    &mut ws,
                                )
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("training worker panicked"))
                        .sum::<f64>()
                });
                // Torn writes can leave a row marginally outside; pull it back.
                let mut buf = vec![0.0; len];
                let mut store = AtomicStore { data, len };
                for i in 0..m {
                    store.read_row(i, &mut buf);
                    project_row(&mut buf, config.eps_proj);
                    store.write_row(i, &buf);
                }
                loss
            }
        };
        trace.push(EpochStats {
            epoch,
            lr: params.lr,
            mean_loss: loss / positives.len() as f64,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    if let Some(data) = shared {
        for (dst, src) in table.data_mut().iter_mut().zip(data) {
            *dst = f64::from_bits(src.into_inner());
        }
    }
    Ok(TrainOutput { table, trace })
}
