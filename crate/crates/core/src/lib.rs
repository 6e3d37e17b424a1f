//! Hierarchical graph embeddings in the unit ball model of complex hyperbolic
//! space.
//!
//! Nodes are embedded as points `z ∈ ℂⁿ` with `|z| < 1` (homogeneous
//! coordinate fixed to 1). Training minimises a soft-ranking loss with
//! projected Riemannian SGD; evaluation ranks true neighbours by embedding
//! distance and reports MAP, MRR and Hits@N.
//!
//! Module map:
//! - [`geometry`]: Hermitian form, ball distance, metric rescale, restriction
//!   formulas.
//! - [`gradients`]: closed-form distance partials and a finite-difference
//!   oracle.
//! - [`model`]: embedding tables, loss, RSGD trainer, checkpoints.
//! - [`graphs`]: edge lists, generators, transitive closure, splits,
//!   δ-hyperbolicity.
//! - [`eval`]: ranking protocol and metrics.
//! - [`poincare`]: real Poincaré-ball baseline sharing the trainer.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod gradients;
pub mod graphs;
pub mod model;
pub mod poincare;

pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport, RankingMode, RankingTask};
pub use geometry::{ComplexPoint, ComplexScalar, MetricMode, PointRef};
pub use gradients::Gradient;
pub use graphs::{Graph, SplitSpec};
pub use model::{EmbeddingTable, Embeddings, Manifold, TrainConfig, UnitBall};
pub use poincare::PoincareBall;
