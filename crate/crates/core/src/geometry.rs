//! Unit ball model of complex hyperbolic space.
//!
//! A point `z = (z_1, …, z_n)` is identified with the homogeneous vector
//! `(z_1, …, z_n, 1) ∈ ℂ^{n,1}`. The standard Hermitian form of signature
//! `(n, 1)` is
//!
//! ```text
//! ⟪z, w⟫ = z_1·conj(w_1) + … + z_n·conj(w_n) − 1
//! ```
//!
//! and the distance is `arcosh(2·|⟪z,w⟫|² / (⟪z,z⟫·⟪w,w⟫) − 1)`.
//!
//! Coordinates are stored split into real and imaginary halves. A flat row of
//! `2n` floats is laid out as `[re_0 … re_{n−1}, im_0 … im_{n−1}]`, which is
//! also the checkpoint layout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value of the Hermitian form.
pub type ComplexScalar = Complex64;

/// Borrowed view of a complex vector. No ball-membership guarantee.
#[derive(Debug, Clone, Copy)]
pub struct PointRef<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
}

impl<'a> PointRef<'a> {
    pub fn new(re: &'a [f64], im: &'a [f64]) -> Self {
        PointRef { re, im }
    }

    /// Splits a `2n` row into its real and imaginary halves.
    pub fn from_row(row: &'a [f64]) -> Self {
        let (re, im) = row.split_at(row.len() / 2);
        PointRef { re, im }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    fn check_shape(&self) -> Result<()> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch {
                expected: self.re.len(),
                found: self.im.len(),
            });
        }
        if self.re.is_empty() {
            return Err(Error::Config("points need at least one dimension".into()));
        }
        if self.re.iter().chain(self.im).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    fn check_in_ball(&self) -> Result<()> {
        self.check_shape()?;
        let norm_sq = ball_norm_sq(*self);
        if norm_sq < 1.0 {
            Ok(())
        } else {
            Err(Error::OutsideBall { norm_sq })
        }
    }
}

/// A point strictly inside the unit ball of `ℂⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexPoint {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        PointRef::new(&re, &im).check_in_ball()?;
        Ok(ComplexPoint { re, im })
    }

    pub fn origin(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        ComplexPoint {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn from_complex(coords: &[Complex64]) -> Result<Self> {
        Self::new(
            coords.iter().map(|c| c.re).collect(),
            coords.iter().map(|c| c.im).collect(),
        )
    }

    /// Builds a point from a `[re…, im…]` row.
    pub fn from_row(row: &[f64]) -> Result<Self> {
        if !row.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: row.len() + 1,
                found: row.len(),
            });
        }
        let p = PointRef::from_row(row);
        Self::new(p.re.to_vec(), p.im.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn coord(&self, j: usize) -> Complex64 {
        Complex64::new(self.re[j], self.im[j])
    }

    pub fn as_ref(&self) -> PointRef<'_> {
        PointRef::new(&self.re, &self.im)
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.re.clone();
        row.extend_from_slice(&self.im);
        row
    }
}

impl<'a> From<&'a ComplexPoint> for PointRef<'a> {
    fn from(p: &'a ComplexPoint) -> Self {
        p.as_ref()
    }
}

/// How Euclidean gradients are turned into Riemannian ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// Scalar factor `(1 − |z|²)² / 4`.
    #[default]
    Conformal,
    /// Reciprocal of the Bergman quadratic form on the gradient direction.
    #[serde(alias = "quadratic")]
    QuadraticForm,
}

impl std::str::FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conformal" => Ok(MetricMode::Conformal),
            "quadratic" | "quadratic_form" => Ok(MetricMode::QuadraticForm),
            other => Err(Error::Config(format!("unknown metric mode {other:?}"))),
        }
    }
}

fn check_same_dim(z: PointRef, w: PointRef) -> Result<()> {
    if z.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            found: w.dim(),
        });
    }
    Ok(())
}

/// `Σ_j z_j·conj(w_j) − 1`.
pub fn hermitian_form(z: PointRef, w: PointRef) -> Result<ComplexScalar> {
    z.check_shape()?;
    w.check_shape()?;
    check_same_dim(z, w)?;
    Ok(hermitian_form_unchecked(z, w))
}

pub(crate) fn hermitian_form_unchecked(z: PointRef, w: PointRef) -> Complex64 {
    let mut re = -1.0;
    let mut im = 0.0;
    for j in 0..z.re.len() {
        let (a, b) = (z.re[j], z.im[j]);
        let (c, d) = (w.re[j], w.im[j]);
        // (a + ib)(c − id)
        re += a * c + b * d;
        im += b * c - a * d;
    }
    Complex64::new(re, im)
}

/// `|z_1|² + … + |z_n|²`.
pub fn ball_norm_sq(z: PointRef) -> f64 {
    z.re.iter().chain(z.im).map(|v| v * v).sum()
}

/// Evaluates `sinh²(d/2) = cosh²(d/2) − 1` as a sum of nonnegative terms,
///
/// ```text
/// sinh²(d/2) = ((1 − |z|²)|w − z|² + |⟨w − z, z⟩|²) / ((1 − |z|²)(1 − |w|²))
/// ```
///
/// which keeps full relative accuracy for nearby points and gives exactly 0
/// for `z == w`, where the arcosh form only resolves about `1e-8`.
pub(crate) fn distance_unchecked(z: PointRef, w: PointRef) -> f64 {
    let mut zz = 0.0;
    let mut ww = 0.0;
    let mut dd = 0.0;
    let (mut dz_re, mut dz_im) = (0.0, 0.0);
    for j in 0..z.re.len() {
        let (a, b) = (z.re[j], z.im[j]);
        let (c, d) = (w.re[j] - a, w.im[j] - b);
        zz += a * a + b * b;
        ww += w.re[j] * w.re[j] + w.im[j] * w.im[j];
        dd += c * c + d * d;
        // (c + id)(a − ib)
        dz_re += c * a + d * b;
        dz_im += d * a - c * b;
    }
    let num = (1.0 - zz) * dd + dz_re * dz_re + dz_im * dz_im;
    let den = (1.0 - zz) * (1.0 - ww);
    2.0 * (num / den).sqrt().asinh()
}

/// Complex hyperbolic distance between two points of the unit ball.
pub fn distance(z: PointRef, w: PointRef) -> Result<f64> {
    z.check_in_ball()?;
    w.check_in_ball()?;
    check_same_dim(z, w)?;
    Ok(distance_unchecked(z, w))
}

/// Bergman quadratic form `ds²(v)` at `z` for a tangent vector `v`
/// (homogeneous component of `dz` set to zero):
///
/// ```text
/// ds² = −4/⟪z,z⟫² · det [[⟪z,z⟫, ⟪dz,z⟫], [⟪z,dz⟫, ⟪dz,dz⟫]]
/// ```
pub(crate) fn bergman_quadratic_unchecked(z: PointRef, v: PointRef) -> f64 {
    let zz = ball_norm_sq(z) - 1.0;
    let mut vz = Complex64::new(0.0, 0.0);
    for j in 0..z.re.len() {
        vz += Complex64::new(v.re[j], v.im[j]) * Complex64::new(z.re[j], -z.im[j]);
    }
    let vv = ball_norm_sq(v);
    let det = zz * vv - vz.norm_sqr();
    -4.0 * det / (zz * zz)
}

pub(crate) fn conformal_scale_unchecked(norm_sq: f64) -> f64 {
    let a = 1.0 - norm_sq;
    a * a / 4.0
}

/// Metric factor at `z`.
///
/// In [`MetricMode::Conformal`] this is the inverse rescale `(1 − |z|²)²/4`
/// applied to Euclidean gradients. In [`MetricMode::QuadraticForm`] it is the
/// value of the Bergman quadratic form on `direction` (not its inverse).
pub fn metric_scale(z: PointRef, mode: MetricMode, direction: Option<PointRef>) -> Result<f64> {
    z.check_in_ball()?;
    match mode {
        MetricMode::Conformal => Ok(conformal_scale_unchecked(ball_norm_sq(z))),
        MetricMode::QuadraticForm => {
            let v = direction.ok_or(Error::ZeroDirection)?;
            v.check_shape()?;
            check_same_dim(z, v)?;
            if ball_norm_sq(v) == 0.0 {
                return Err(Error::ZeroDirection);
            }
            Ok(bergman_quadratic_unchecked(z, v))
        }
    }
}

fn check_disk(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm_sq = z.norm_sqr();
    if norm_sq >= 1.0 {
        return Err(Error::OutsideBall { norm_sq });
    }
    Ok(())
}

/// Distance on a single complex line through the ball, via
/// `cosh²(d/2) = |z·conj(w) − 1|² / ((|z|² − 1)(|w|² − 1))`.
pub fn poincare_line_distance(z: Complex64, w: Complex64) -> Result<f64> {
    check_disk(z)?;
    check_disk(w)?;
    let num = (z * w.conj() - 1.0).norm_sqr();
    let den = (z.norm_sqr() - 1.0) * (w.norm_sqr() - 1.0);
    Ok(2.0 * (num / den).max(1.0).sqrt().acosh())
}

/// Distance on the totally real slice of the ball, via
/// `cosh²(d/2) = (x·y − 1)² / ((|x|² − 1)(|y|² − 1))`.
pub fn klein_real_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    for norm_sq in [xx, yy] {
        if norm_sq >= 1.0 {
            return Err(Error::OutsideBall { norm_sq });
        }
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let ratio = (xy - 1.0).powi(2) / ((xx - 1.0) * (yy - 1.0));
    Ok(2.0 * ratio.max(1.0).sqrt().acosh())
}
