//! Embedding tables, the soft-ranking loss and the projected RSGD trainer.
//!
//! The trainer is generic over [`Manifold`], so the complex unit ball and the
//! real Poincaré baseline share the loss, the negative sampler and the seed
//! stream; only distance, distance gradient and metric rescale differ.

mod checkpoint;
mod loss;
mod train;

pub use checkpoint::{
    load_any_checkpoint, load_checkpoint, load_checkpoint_as, read_checkpoint, save_checkpoint,
    write_checkpoint, AnyCheckpoint, Checkpoint,
};
pub use loss::{
    batch_gradient, loss_distance_partials, soft_ranking_loss, LossBatch, LossPartials,
    NegativeSampler, RowGradients,
};
pub use train::{rsgd_step, train, train_manifold, EpochStats, TrainConfig, TrainOutput};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
#[cfg(test)]
use crate::geometry::ball_norm_sq;
use crate::geometry::{distance_unchecked, ComplexPoint, MetricMode, PointRef};
use crate::gradients::{add_distance_partials, rescale_factor_unchecked};

/// Half-width of the uniform initialisation box.
pub const INIT_RANGE: f64 = 1e-3;

/// Geometry of one embedding row. Rows are flat `f64` slices of
/// [`Manifold::row_len`] entries that live strictly inside the unit ball.
pub trait Manifold: Clone + Send + Sync + 'static {
    /// Header tag used in checkpoint files.
    const TAG: &'static str;

    fn row_len(&self) -> usize;

    /// Dimension written to (and read from) the checkpoint header.
    fn header_dim(&self) -> usize;

    fn from_header_dim(dim: usize) -> Result<Self>;

    fn distance(&self, a: &[f64], b: &[f64]) -> f64;

    /// Adds `coef · ∂d(a, b)/∂a` into `out`. Returns `false` and leaves `out`
    /// untouched when the gradient is singular (`a ≈ b`).
    fn add_distance_grad(&self, a: &[f64], b: &[f64], coef: f64, out: &mut [f64]) -> bool;

    /// Turns a Euclidean gradient at `point` into the Riemannian one, in place.
    fn rescale(&self, point: &[f64], grad: &mut [f64], mode: MetricMode);
}

/// Unit ball of `ℂⁿ`; rows are `[re…, im…]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitBall {
    n: usize,
}

impl UnitBall {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(UnitBall { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

impl Manifold for UnitBall {
    const TAG: &'static str = "cxhyp-v1";

    fn row_len(&self) -> usize {
        2 * self.n
    }

    fn header_dim(&self) -> usize {
        self.n
    }

    fn from_header_dim(dim: usize) -> Result<Self> {
        UnitBall::new(dim)
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        distance_unchecked(PointRef::from_row(a), PointRef::from_row(b))
    }

    fn add_distance_grad(&self, a: &[f64], b: &[f64], coef: f64, out: &mut [f64]) -> bool {
        add_distance_partials(PointRef::from_row(a), PointRef::from_row(b), coef, out)
    }

    fn rescale(&self, point: &[f64], grad: &mut [f64], mode: MetricMode) {
        let s = rescale_factor_unchecked(PointRef::from_row(point), PointRef::from_row(grad), mode);
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Pulls a row back inside the ball: rows with norm `≥ 1` are rescaled to
/// norm `1 − eps`, others are left alone.
pub(crate) fn project_row(row: &mut [f64], eps: f64) {
    let norm_sq: f64 = row.iter().map(|v| v * v).sum();
    if norm_sq >= 1.0 {
        let s = (1.0 - eps) / norm_sq.sqrt();
        row.iter_mut().for_each(|v| *v *= s);
    }
}

/// Projects a candidate point into the open unit ball.
pub fn project(candidate: PointRef, eps: f64) -> Result<ComplexPoint> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!(
            "projection epsilon {eps} must be in (0, 1)"
        )));
    }
    if candidate.re.len() != candidate.im.len() {
        return Err(Error::DimensionMismatch {
            expected: candidate.re.len(),
            found: candidate.im.len(),
        });
    }
    if candidate
        .re
        .iter()
        .chain(candidate.im)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let mut row: Vec<f64> = candidate.re.iter().chain(candidate.im).copied().collect();
    project_row(&mut row, eps);
    ComplexPoint::from_row(&row)
}

/// A table of `m` embedding rows on a manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<M> {
    manifold: M,
    data: Vec<f64>,
}

/// Complex unit-ball embedding table.
pub type EmbeddingTable = Embeddings<UnitBall>;

impl<M: Manifold> Embeddings<M> {
    /// Wraps row-major data, checking every row is finite and inside the ball.
    pub fn from_data(manifold: M, data: Vec<f64>) -> Result<Self> {
        let len = manifold.row_len();
        if !data.len().is_multiple_of(len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: data.len() % len,
            });
        }
        for row in data.chunks(len) {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let norm_sq: f64 = row.iter().map(|v| v * v).sum();
            if norm_sq >= 1.0 {
                return Err(Error::OutsideBall { norm_sq });
            }
        }
        Ok(Embeddings { manifold, data })
    }

    /// Uniform initialisation in `(−INIT_RANGE, INIT_RANGE)` per coordinate.
    pub fn init(manifold: M, m: usize, rng: &mut impl Rng) -> Self {
        let data = (0..m * manifold.row_len())
            .map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
            .collect();
        Embeddings { manifold, data }
    }

    pub fn manifold(&self) -> &M {
        &self.manifold
    }

    pub fn num_rows(&self) -> usize {
        self.data.len() / self.manifold.row_len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let len = self.manifold.row_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn check_id(&self, id: usize) -> Result<()> {
        let len = self.num_rows();
        if id >= len {
            return Err(Error::InvalidId { id, len });
        }
        Ok(())
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_id(i)?;
        self.check_id(j)?;
        Ok(self.manifold.distance(self.row(i), self.row(j)))
    }

    /// Distances from row `i` to every row.
    pub fn distances_from(&self, i: usize, out: &mut Vec<f64>) {
        let a = self.row(i);
        out.clear();
        out.extend(
            self.data
                .chunks(self.manifold.row_len())
                .map(|b| self.manifold.distance(a, b)),
        );
    }

    pub fn max_norm_sq(&self) -> f64 {
        self.data
            .chunks(self.manifold.row_len())
            .map(|r| r.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Embeddings<UnitBall> {
    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn point(&self, i: usize) -> PointRef<'_> {
        PointRef::from_row(self.row(i))
    }

    pub fn complex_point(&self, i: usize) -> ComplexPoint {
        ComplexPoint::from_row(self.row(i)).expect("table rows stay in the ball")
    }

    pub fn from_points(points: &[ComplexPoint]) -> Result<Self> {
        let n = points.first().map(|p| p.dim()).ok_or(Error::NoEdges)?;
        let mut data = Vec::with_capacity(points.len() * 2 * n);
        for p in points {
            if p.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.dim(),
                });
            }
            data.extend(p.to_row());
        }
        Self::from_data(UnitBall::new(n)?, data)
    }
}

/// `m` points of complex dimension `n`, seeded.
pub fn init_embeddings(m: usize, n: usize, seed: u64) -> Result<EmbeddingTable> {
    if m == 0 {
        return Err(Error::Config("need at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Embeddings::init(UnitBall::new(n)?, m, &mut rng))
}
