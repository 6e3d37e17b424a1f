//! Real Poincaré-ball baseline.
//!
//! Shares the loss, sampler, seed stream, trainer and evaluation with the
//! complex model. A complex dimension `n` is matched by `2n` real coordinates
//! so both models carry the same number of parameters.

use crate::error::{Error, Result};
use crate::geometry::MetricMode;
use crate::graphs::Graph;
use crate::model::{train_manifold, Manifold, TrainConfig, TrainOutput};

/// Gradients below this `γ² − 1` are treated as singular.
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoincareBall {
    dim: usize,
}

impl PoincareBall {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(PoincareBall { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A point of the open real unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoint {
    coords: Vec<f64>,
}

impl RealPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_point(&coords)?;
        Ok(RealPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

fn check_point(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let norm_sq = dot(x, x);
    if norm_sq >= 1.0 {
        return Err(Error::OutsideBall { norm_sq });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gamma(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let alpha = 1.0 - dot(u, u);
    let beta = 1.0 - dot(v, v);
    let diff: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (alpha, beta, 1.0 + 2.0 * diff / (alpha * beta))
}

/// `2·arsinh(√(‖u − v‖² / (αβ)))`, equal to `arcosh γ` but accurate for
/// nearby points.
fn distance_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let alpha = 1.0 - dot(u, u);
    let beta = 1.0 - dot(v, v);
    let diff: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    2.0 * (diff / (alpha * beta)).sqrt().asinh()
}

/// `arcosh(1 + 2‖u − v‖² / ((1 − ‖u‖²)(1 − ‖v‖²)))`.
pub fn poincare_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    check_point(u)?;
    check_point(v)?;
    Ok(distance_unchecked(u, v))
}

fn add_grad(u: &[f64], v: &[f64], coef: f64, out: &mut [f64]) -> bool {
    let (alpha, beta, g) = gamma(u, v);
    let g2 = g * g - 1.0;
    if g2 <= SINGULAR_EPS {
        return false;
    }
    let scale = 4.0 / (beta * g2.sqrt());
    let cu = (dot(v, v) - 2.0 * dot(u, v) + 1.0) / (alpha * alpha);
    for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
        *o += coef * scale * (cu * ui - vi / alpha);
    }
    true
}

/// `∂d(u, v)/∂u`. Errors when `u ≈ v`.
pub fn poincare_distance_grad(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    poincare_distance(u, v)?;
    let mut out = vec![0.0; u.len()];
    if !add_grad(u, v, 1.0, &mut out) {
        return Err(Error::SingularGradient);
    }
    Ok(out)
}

impl Manifold for PoincareBall {
    const TAG: &'static str = "poincare-v1";

    fn row_len(&self) -> usize {
        self.dim
    }

    fn header_dim(&self) -> usize {
        self.dim
    }

    fn from_header_dim(dim: usize) -> Result<Self> {
        PoincareBall::new(dim)
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        distance_unchecked(a, b)
    }

    fn add_distance_grad(&self, a: &[f64], b: &[f64], coef: f64, out: &mut [f64]) -> bool {
        add_grad(a, b, coef, out)
    }

    /// The metric is conformal, so both modes use `(1 − ‖u‖²)² / 4`.
    fn rescale(&self, point: &[f64], grad: &mut [f64], _mode: MetricMode) {
        let s = (1.0 - dot(point, point)).powi(2) / 4.0;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Trains the baseline with `2 · config.dim` real coordinates.
pub fn poincare_rsgd_train(
    graph: &Graph,
    config: &TrainConfig,
) -> Result<TrainOutput<PoincareBall>> {
    let dim = config
        .dim
        .checked_mul(2)
        .ok_or_else(|| Error::Config("dimension too large".into()))?;
    train_manifold(graph, config, PoincareBall::new(dim)?)
}
