//! Euclidean partials of the unit-ball distance and their Riemannian rescale.
//!
//! With `p = cosh d = 2·⟪z,w⟫⟪w,z⟫/(⟪z,z⟫⟪w,w⟫) − 1` and `z = x + iy`,
//!
//! ```text
//! ∂d/∂x = 4/√(p²−1) · ( Re(⟪z,w⟫·w)/(⟪z,z⟫⟪w,w⟫) − ⟪z,w⟫⟪w,z⟫·x/(⟪z,z⟫²⟪w,w⟫) )
//! ∂d/∂y = 4/√(p²−1) · ( Im(⟪z,w⟫·w)/(⟪z,z⟫⟪w,w⟫) − ⟪z,w⟫⟪w,z⟫·y/(⟪z,z⟫²⟪w,w⟫) )
//! ```
//!
//! These come from the Wirtinger pair `∂d/∂z_j`, `∂d/∂z̄_j` through
//! `∂/∂x = ∂/∂z + ∂/∂z̄` and `∂/∂y = i(∂/∂z − ∂/∂z̄)`. The runtime evaluates
//! the real forms directly; the Wirtinger route is kept as a test.

#[cfg(test)]
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    ball_norm_sq, bergman_quadratic_unchecked, conformal_scale_unchecked, hermitian_form_unchecked,
    metric_scale, MetricMode, PointRef,
};

/// Cutoff on `p − 1` below which the distance gradient is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Gradient with respect to the real and imaginary parts of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub d_re: Vec<f64>,
    pub d_im: Vec<f64>,
}

impl Gradient {
    pub fn zeros(n: usize) -> Self {
        Gradient {
            d_re: vec![0.0; n],
            d_im: vec![0.0; n],
        }
    }

    pub fn from_row(row: &[f64]) -> Self {
        let (re, im) = row.split_at(row.len() / 2);
        Gradient {
            d_re: re.to_vec(),
            d_im: im.to_vec(),
        }
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = self.d_re.clone();
        row.extend_from_slice(&self.d_im);
        row
    }

    pub fn as_ref(&self) -> PointRef<'_> {
        PointRef::new(&self.d_re, &self.d_im)
    }

    pub fn norm(&self) -> f64 {
        ball_norm_sq(self.as_ref()).sqrt()
    }

    fn scaled(&self, s: f64) -> Self {
        Gradient {
            d_re: self.d_re.iter().map(|v| v * s).collect(),
            d_im: self.d_im.iter().map(|v| v * s).collect(),
        }
    }
}

/// Adds `coef · ∂d(z, w)/∂(x, y)` into `out` (a `[re…, im…]` row).
///
/// Returns `false` without touching `out` when `p − 1 ≤ SINGULAR_EPS`.
pub(crate) fn add_distance_partials(z: PointRef, w: PointRef, coef: f64, out: &mut [f64]) -> bool {
    let n = z.re.len();
    let zw = hermitian_form_unchecked(z, w);
    let zz = ball_norm_sq(z) - 1.0;
    let ww = ball_norm_sq(w) - 1.0;
    let mag = zw.norm_sqr();
    let p = 2.0 * mag / (zz * ww) - 1.0;
    if p - 1.0 <= SINGULAR_EPS {
        return false;
    }
    let front = coef * 4.0 / (p * p - 1.0).sqrt();
    let a = front / (zz * ww);
    let b = front * mag / (zz * zz * ww);
    for j in 0..n {
        // ⟪z,w⟫ · w_j
        let re = zw.re * w.re[j] - zw.im * w.im[j];
        let im = zw.re * w.im[j] + zw.im * w.re[j];
        out[j] += a * re - b * z.re[j];
        out[n + j] += a * im - b * z.im[j];
    }
    true
}

/// Euclidean gradient of `distance(·, w)` at `z`.
pub fn distance_partials(z: PointRef, w: PointRef) -> Result<Gradient> {
    // Validates ball membership and shapes.
    crate::geometry::distance(z, w)?;
    let mut row = vec![0.0; 2 * z.dim()];
    if !add_distance_partials(z, w, 1.0, &mut row) {
        return Err(Error::SingularGradient);
    }
    Ok(Gradient::from_row(&row))
}

/// Scale applied to a Euclidean gradient `g` at `z`.
///
/// Conformal: `(1 − |z|²)²/4`. Quadratic form: `1/ds²(g/|g|)`.
pub(crate) fn rescale_factor_unchecked(z: PointRef, g: PointRef, mode: MetricMode) -> f64 {
    match mode {
        MetricMode::Conformal => conformal_scale_unchecked(ball_norm_sq(z)),
        MetricMode::QuadraticForm => {
            let g_sq = ball_norm_sq(g);
            if g_sq == 0.0 {
                return 0.0;
            }
            g_sq / bergman_quadratic_unchecked(z, g)
        }
    }
}

/// Riemannian gradient from a Euclidean one. Direction is preserved.
pub fn riemannian_gradient(euclid: &Gradient, z: PointRef, mode: MetricMode) -> Result<Gradient> {
    if euclid.d_re.len() != z.dim() || euclid.d_im.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            found: euclid.d_re.len(),
        });
    }
    if euclid
        .d_re
        .iter()
        .chain(&euclid.d_im)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let scale = match mode {
        MetricMode::Conformal => metric_scale(z, mode, None)?,
        MetricMode::QuadraticForm => {
            if euclid.norm() == 0.0 {
                metric_scale(z, MetricMode::Conformal, None)?;
                return Ok(Gradient::zeros(z.dim()));
            }
            let norm = euclid.norm();
            let unit = euclid.scaled(1.0 / norm);
            1.0 / metric_scale(z, mode, Some(unit.as_ref()))?
        }
    };
    Ok(euclid.scaled(scale))
}

/// Central differences over all `2n` real coordinates.
pub fn finite_difference_oracle<F>(f: F, z: PointRef, h: f64) -> Result<Gradient>
where
    F: Fn(PointRef) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(
            "finite-difference step must be positive".into(),
        ));
    }
    let base: Vec<f64> = z.re.iter().chain(z.im).copied().collect();
    let mut grad = vec![0.0; base.len()];
    let mut probe = base.clone();
    for k in 0..base.len() {
        probe[k] = base[k] + h;
        let plus = eval_in_ball(&f, &probe)?;
        probe[k] = base[k] - h;
        let minus = eval_in_ball(&f, &probe)?;
        probe[k] = base[k];
        grad[k] = (plus - minus) / (2.0 * h);
    }
    Ok(Gradient::from_row(&grad))
}

fn eval_in_ball<F>(f: &F, row: &[f64]) -> Result<f64>
where
    F: Fn(PointRef) -> Result<f64>,
{
    let p = PointRef::from_row(row);
    let norm_sq = ball_norm_sq(p);
    if norm_sq >= 1.0 {
        return Err(Error::OutsideBall { norm_sq });
    }
    f(p)
}

/// Wirtinger derivatives `(∂d/∂z_j, ∂d/∂z̄_j)` for every coordinate.
#[cfg(test)]
pub(crate) fn wirtinger_partials(z: PointRef, w: PointRef) -> Vec<(Complex64, Complex64)> {
    let zw = hermitian_form_unchecked(z, w);
    let wz = zw.conj();
    let zz = ball_norm_sq(z) - 1.0;
    let ww = ball_norm_sq(w) - 1.0;
    let p = 2.0 * zw.norm_sqr() / (zz * ww) - 1.0;
    let front = 2.0 / (p * p - 1.0).sqrt();
    (0..z.dim())
        .map(|j| {
            let zj = Complex64::new(z.re[j], z.im[j]);
            let wj = Complex64::new(w.re[j], w.im[j]);
            let dz = front * (wj.conj() * wz / (zz * ww) - zj.conj() * zw * wz / (zz * zz * ww));
            let dzbar = front * (wj * zw / (zz * ww) - zj * zw * wz / (zz * zz * ww));
            (dz, dzbar)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, ComplexPoint};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize, max_radius: f64) -> ComplexPoint {
        loop {
            let row: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let r = max_radius * rng.gen::<f64>().sqrt();
                let row: Vec<f64> = row.iter().map(|v| v / norm * r).collect();
                return ComplexPoint::from_row(&row).unwrap();
            }
        }
    }

    fn rel_err(a: &Gradient, b: &Gradient) -> f64 {
        let diff: f64 = a
            .to_row()
            .iter()
            .zip(b.to_row())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / b.norm().max(1e-12)
    }

    #[test]
    fn radial_partial_matches_closed_form() {
        let z = ComplexPoint::new(vec![0.5], vec![0.0]).unwrap();
        let w = ComplexPoint::origin(1);
        let g = distance_partials(z.as_ref(), w.as_ref()).unwrap();
        assert_abs_diff_eq!(g.d_re[0], 2.0 / 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(g.d_im[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coincident_points_are_singular() {
        let z = ComplexPoint::new(vec![0.2, 0.1], vec![-0.3, 0.0]).unwrap();
        assert!(matches!(
            distance_partials(z.as_ref(), z.as_ref()),
            Err(Error::SingularGradient)
        ));
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.gen_range(1..6);
            let z = random_point(&mut rng, n, 0.95);
            let w = random_point(&mut rng, n, 0.95);
            if distance(z.as_ref(), w.as_ref()).unwrap() < 1e-3 {
                continue;
            }
            let analytic = distance_partials(z.as_ref(), w.as_ref()).unwrap();
            let numeric =
                finite_difference_oracle(|p| distance(p, w.as_ref()), z.as_ref(), 1e-6).unwrap();
            assert!(rel_err(&analytic, &numeric) < 1e-4);
            checked += 1;
        }
    }

    #[test]
    fn wirtinger_route_agrees_with_real_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = random_point(&mut rng, 3, 0.9);
            let w = random_point(&mut rng, 3, 0.9);
            let closed = distance_partials(z.as_ref(), w.as_ref()).unwrap();
            for (j, (dz, dzbar)) in wirtinger_partials(z.as_ref(), w.as_ref())
                .into_iter()
                .enumerate()
            {
                // Real-valued d ⇒ ∂d/∂z̄ = conj(∂d/∂z).
                assert!((dzbar - dz.conj()).norm() < 1e-10);
                let dx = dz + dzbar;
                let dy = Complex64::i() * (dz - dzbar);
                assert!(dx.im.abs() < 1e-10 && dy.im.abs() < 1e-10);
                assert_abs_diff_eq!(dx.re, closed.d_re[j], epsilon = 1e-10);
                assert_abs_diff_eq!(dy.re, closed.d_im[j], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn partials_are_role_symmetric() {
        // d(z, w) = d(w, z), so differentiating either in its z slot agrees.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_point(&mut rng, 4, 0.9);
            let b = random_point(&mut rng, 4, 0.9);
            let g1 = distance_partials(a.as_ref(), b.as_ref()).unwrap();
            let g2 =
                finite_difference_oracle(|p| distance(b.as_ref(), p), a.as_ref(), 1e-6).unwrap();
            assert!(rel_err(&g1, &g2) < 1e-4);
        }
    }

    #[test]
    fn oracle_examples() {
        let z = ComplexPoint::new(vec![0.3, 0.4], vec![0.0, 0.0]).unwrap();
        let g = finite_difference_oracle(|p| Ok(ball_norm_sq(p)), z.as_ref(), 1e-4).unwrap();
        assert_abs_diff_eq!(g.d_re[0], 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(g.d_re[1], 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(g.d_im[0], 0.0, epsilon = 1e-9);

        let g = finite_difference_oracle(|_| Ok(1.5), z.as_ref(), 1e-4).unwrap();
        assert!(g.to_row().iter().all(|&v| v == 0.0));

        let near = ComplexPoint::new(vec![0.9999], vec![0.0]).unwrap();
        assert!(matches!(
            finite_difference_oracle(|p| Ok(ball_norm_sq(p)), near.as_ref(), 1e-3),
            Err(Error::OutsideBall { .. })
        ));
    }

    #[test]
    fn riemannian_gradient_examples() {
        let o = ComplexPoint::origin(2);
        let e = Gradient {
            d_re: vec![1.0, -2.0],
            d_im: vec![0.5, 3.0],
        };
        let r = riemannian_gradient(&e, o.as_ref(), MetricMode::Conformal).unwrap();
        assert_eq!(r.to_row(), vec![0.25, -0.5, 0.125, 0.75]);

        let zero = Gradient::zeros(2);
        for mode in [MetricMode::Conformal, MetricMode::QuadraticForm] {
            let r = riemannian_gradient(&zero, o.as_ref(), mode).unwrap();
            assert!(r.to_row().iter().all(|&v| v == 0.0));
        }

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = ComplexPoint::new(vec![s, 0.0], vec![0.0, 0.0]).unwrap();
        let ones = Gradient {
            d_re: vec![1.0; 2],
            d_im: vec![1.0; 2],
        };
        let r = riemannian_gradient(&ones, z.as_ref(), MetricMode::Conformal).unwrap();
        for v in r.to_row() {
            assert_abs_diff_eq!(v, 0.0625, epsilon = 1e-15);
        }
    }

    #[test]
    fn rescale_preserves_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = random_point(&mut rng, 3, 0.99);
            let e =
                Gradient::from_row(&(0..6).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>());
            for mode in [MetricMode::Conformal, MetricMode::QuadraticForm] {
                let r = riemannian_gradient(&e, z.as_ref(), mode).unwrap();
                for (a, b) in e.to_row().iter().zip(r.to_row()) {
                    assert!(a * b >= 0.0);
                }
            }
        }
    }
}
