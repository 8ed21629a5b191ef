//! Scalar functions of a flat parameter vector with exact gradients, plus a
//! central-difference checker for those gradients.
//!
//! Gradients are produced by hand-written reverse passes in the model and
//! hypernetwork modules; this module only fixes the contract they satisfy.

use alloc::vec::Vec;

use crate::error::{ensure_finite, ensure_finite_scalar, Error, Result};
use crate::linalg::DenseVector;

/// A deterministic scalar function `f: ℝⁿ → ℝ` that can report `∇f`.
pub trait DiffScalarFn {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Value and gradient at `x`. The gradient has length `dim()`.
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl<F: DiffScalarFn + ?Sized> DiffScalarFn for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).value_and_grad(x)
    }
}

/// Adapts a pair of closures into a [`DiffScalarFn`].
pub struct FnDiff<V, G> {
    dim: usize,
    value: V,
    grad: G,
}

impl<V, G> FnDiff<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(dim: usize, value: V, grad: G) -> Self {
        Self { dim, value, grad }
    }
}

impl<V, G> DiffScalarFn for FnDiff<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.value)(x))
    }
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok(((self.value)(x), (self.grad)(x)))
    }
}

/// Evaluates `f(x)` and `∇f(x)`, checking shapes and finiteness.
pub fn value_and_grad<F: DiffScalarFn + ?Sized>(f: &F, x: &[f64]) -> Result<(f64, DenseVector)> {
    if x.len() != f.dim() {
        return Err(Error::shape("value_and_grad", f.dim(), x.len()));
    }
    let (v, g) = f.value_and_grad(x)?;
    if g.len() != x.len() {
        return Err(Error::shape("value_and_grad: gradient", x.len(), g.len()));
    }
    let v = ensure_finite_scalar("value_and_grad: value", v)?;
    ensure_finite("value_and_grad: gradient", &g)?;
    Ok((v, DenseVector::from_vec_unchecked(g)))
}

/// Central-difference estimate of one partial derivative.
pub fn central_difference<F: DiffScalarFn + ?Sized>(f: &F, x: &[f64], i: usize, eps: f64) -> Result<f64> {
    let mut probe = x.to_vec();
    probe[i] = x[i] + eps;
    let up = f.value(&probe)?;
    probe[i] = x[i] - eps;
    let down = f.value(&probe)?;
    Ok((up - down) / (2.0 * eps))
}

/// Max over coordinates of `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<F: DiffScalarFn + ?Sized>(f: &F, x: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::config("eps", "must be positive"));
    }
    let (_, analytic) = value_and_grad(f, x)?;
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let n = central_difference(f, x, i, eps)?;
        worst = worst.max(relative_error(a, n));
    }
    Ok(worst)
}

/// Relative error with the `1e-8` denominator floor used throughout the crate.
#[inline]
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}
