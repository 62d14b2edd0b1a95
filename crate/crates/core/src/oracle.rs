//! Per-slot loss and constraint oracles.

use std::fmt;
use std::sync::Arc;

use crate::error::{argument, MospError, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

/// A convex per-slot loss `f_t`.
pub trait Loss<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;

    /// Exposes the diagonal quadratic structure when present so solvers can
    /// take closed-form or interior-point paths.
    fn as_separable_quadratic(&self) -> Option<&SeparableQuadratic<T>> {
        None
    }
}

/// `f(x) = Σ_i w_i x_i² + q_i x_i` with `w ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic<T> {
    curvature: Vec<T>,
    linear: Vec<T>,
}

impl<T: Scalar> SeparableQuadratic<T> {
    pub fn new(curvature: Vec<T>, linear: Vec<T>) -> Result<Self> {
        if curvature.len() != linear.len() {
            return Err(argument("curvature and linear terms differ in length"));
        }
        if curvature.iter().any(|w| !w.is_finite() || *w < T::zero())
            || !linalg::all_finite(&linear)
        {
            return Err(argument("quadratic loss needs finite, non-negative curvature"));
        }
        Ok(Self { curvature, linear })
    }

    /// Pure quadratic `Σ w_i x_i²`.
    pub fn diagonal(curvature: Vec<T>) -> Result<Self> {
        let n = curvature.len();
        Self::new(curvature, vec![T::zero(); n])
    }

    pub fn curvature(&self) -> &[T] {
        &self.curvature
    }

    pub fn linear(&self) -> &[T] {
        &self.linear
    }

    /// Minimiser of `w x² + a x` over `[lo, hi]` for a single coordinate.
    pub fn scalar_argmin(w: T, a: T, lo: T, hi: T) -> T {
        if w > T::zero() {
            (-a / (T::of(2.0) * w)).max(lo).min(hi)
        } else if a > T::zero() {
            lo
        } else if a < T::zero() {
            hi
        } else {
            lo.max(T::zero()).min(hi)
        }
    }
}

impl<T: Scalar> Loss<T> for SeparableQuadratic<T> {
    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn value(&self, x: &[T]) -> T {
        x.iter()
            .zip(self.curvature.iter().zip(&self.linear))
            .map(|(&xi, (&w, &q))| w * xi * xi + q * xi)
            .sum()
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.curvature.iter().zip(&self.linear))
            .map(|(&xi, (&w, &q))| T::of(2.0) * w * xi + q)
            .collect()
    }

    fn as_separable_quadratic(&self) -> Option<&SeparableQuadratic<T>> {
        Some(self)
    }
}

/// Loss built from a value closure and a gradient closure.
pub struct FnLoss<T> {
    dim: usize,
    value: Box<dyn Fn(&[T]) -> T + Send + Sync>,
    gradient: Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>,
}

impl<T: Scalar> FnLoss<T> {
    pub fn new(
        dim: usize,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
        }
    }

    /// The identically-zero loss on `dim` coordinates.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_| T::zero(), move |x| vec![T::zero(); x.len()])
    }
}

impl<T: Scalar> Loss<T> for FnLoss<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }
}

/// A convex vector-valued constraint `g(x) ≤ 0` given by closures.
pub trait ConvexConstraint<T: Scalar>: Send + Sync {
    fn dim_out(&self) -> usize;
    fn value(&self, x: &[T]) -> Vec<T>;

    /// Gradient of `wᵀ g(x)` in `x`. The default uses central differences.
    fn weighted_gradient(&self, x: &[T], weights: &[T]) -> Vec<T> {
        let h = T::epsilon().cbrt();
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|i| {
                let step = h * x[i].abs().max(T::one());
                probe[i] = x[i] + step;
                let up = linalg::dot(weights, &self.value(&probe));
                probe[i] = x[i] - step;
                let down = linalg::dot(weights, &self.value(&probe));
                probe[i] = x[i];
                (up - down) / (T::of(2.0) * step)
            })
            .collect()
    }
}

/// Constraint from closures: value plus the gradient of the weighted sum.
pub struct FnConstraint<T> {
    dim_out: usize,
    value: Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>,
    weighted_gradient: Box<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>,
}

impl<T: Scalar> FnConstraint<T> {
    pub fn new(
        dim_out: usize,
        value: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        weighted_gradient: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim_out,
            value: Box::new(value),
            weighted_gradient: Box::new(weighted_gradient),
        }
    }
}

impl<T: Scalar> ConvexConstraint<T> for FnConstraint<T> {
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn value(&self, x: &[T]) -> Vec<T> {
        (self.value)(x)
    }
    fn weighted_gradient(&self, x: &[T], weights: &[T]) -> Vec<T> {
        (self.weighted_gradient)(x, weights)
    }
}

/// Per-slot constraint oracle `g_t`.
#[derive(Clone)]
pub enum Constraint<T: Scalar> {
    /// `g(x) = A x + b`. The matrix is shared between slots that use it.
    Affine { matrix: Arc<Matrix<T>>, offset: Vec<T> },
    General(Arc<dyn ConvexConstraint<T>>),
}

impl<T: Scalar> fmt::Debug for Constraint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Affine { matrix, offset } => f
                .debug_struct("Affine")
                .field("rows", &matrix.rows())
                .field("cols", &matrix.cols())
                .field("offset", offset)
                .finish(),
            Constraint::General(g) => f
                .debug_struct("General")
                .field("dim_out", &g.dim_out())
                .finish(),
        }
    }
}

impl<T: Scalar> Constraint<T> {
    pub fn affine(matrix: Arc<Matrix<T>>, offset: Vec<T>) -> Result<Self> {
        if matrix.rows() != offset.len() {
            return Err(argument(format!(
                "constraint offset has length {} but the matrix has {} rows",
                offset.len(),
                matrix.rows()
            )));
        }
        Ok(Constraint::Affine { matrix, offset })
    }

    pub fn general(g: impl ConvexConstraint<T> + 'static) -> Self {
        Constraint::General(Arc::new(g))
    }

    pub fn dim_out(&self) -> usize {
        match self {
            Constraint::Affine { offset, .. } => offset.len(),
            Constraint::General(g) => g.dim_out(),
        }
    }

    pub fn value(&self, x: &[T]) -> Vec<T> {
        match self {
            Constraint::Affine { matrix, offset } => {
                let mut v = matrix.mul_vec(x);
                for (vi, &bi) in v.iter_mut().zip(offset) {
                    *vi += bi;
                }
                v
            }
            Constraint::General(g) => g.value(x),
        }
    }

    /// Gradient of `wᵀ g(x)`.
    pub fn weighted_gradient(&self, x: &[T], weights: &[T]) -> Vec<T> {
        match self {
            Constraint::Affine { matrix, .. } => matrix.tr_mul_vec(weights),
            Constraint::General(g) => g.weighted_gradient(x, weights),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Constraint::Affine { .. })
    }

    pub(crate) fn checked_value(&self, x: &[T]) -> Result<Vec<T>> {
        let v = self.value(x);
        if v.len() != self.dim_out() || !linalg::all_finite(&v) {
            return Err(MospError::OracleFailure(
                "constraint returned a non-finite or mis-sized value".into(),
            ));
        }
        Ok(v)
    }
}

/// One slot of an online problem: the loss `f_t` and constraint `g_t`.
#[derive(Clone)]
pub struct SlotProblem<T: Scalar> {
    pub loss: Arc<dyn Loss<T>>,
    pub constraint: Constraint<T>,
}

impl<T: Scalar> fmt::Debug for SlotProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlotProblem")
            .field("dim", &self.loss.dim())
            .field("constraint", &self.constraint)
            .finish()
    }
}

impl<T: Scalar> SlotProblem<T> {
    pub fn new(loss: impl Loss<T> + 'static, constraint: Constraint<T>) -> Self {
        Self {
            loss: Arc::new(loss),
            constraint,
        }
    }

    pub(crate) fn checked_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let g = self.loss.gradient(x);
        if g.len() != x.len() || !linalg::all_finite(&g) {
            return Err(MospError::OracleFailure(
                "loss gradient is non-finite or mis-sized".into(),
            ));
        }
        Ok(g)
    }

    pub(crate) fn checked_value(&self, x: &[T]) -> Result<T> {
        let v = self.loss.value(x);
        if !v.is_finite() {
            return Err(MospError::OracleFailure("loss value is non-finite".into()));
        }
        Ok(v)
    }

    /// Quadratic loss with affine constraint: the structure the closed-form and
    /// interior-point paths need.
    pub fn quadratic_affine(&self) -> Option<(&SeparableQuadratic<T>, &Arc<Matrix<T>>, &[T])> {
        match (&self.constraint, self.loss.as_separable_quadratic()) {
            (Constraint::Affine { matrix, offset }, Some(q)) => Some((q, matrix, offset)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_argmin_clamps() {
        assert_eq!(SeparableQuadratic::scalar_argmin(1.0, -4.0, 0.0, 10.0), 2.0);
        assert_eq!(SeparableQuadratic::scalar_argmin(1.0, 4.0, 0.0, 10.0), 0.0);
        assert_eq!(SeparableQuadratic::scalar_argmin(0.0, -1.0, 0.0, 3.0), 3.0);
    }

    #[test]
    fn affine_constraint_evaluates_ax_plus_b() {
        let a = Arc::new(Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, -1.0]]));
        let g = Constraint::affine(a, vec![1.0, 0.0]).unwrap();
        assert_eq!(g.value(&[1.0, 1.0]), vec![0.0, 0.0]);
        assert_eq!(g.weighted_gradient(&[0.0, 0.0], &[1.0, 2.0]), vec![1.0, -2.0]);
    }

    #[test]
    fn default_weighted_gradient_matches_analytic() {
        struct Sq;
        impl ConvexConstraint<f64> for Sq {
            fn dim_out(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> Vec<f64> {
                vec![x[0] * x[0] + 3.0 * x[1] - 1.0]
            }
        }
        let g = Sq.weighted_gradient(&[0.7, -0.2], &[2.0]);
        assert!((g[0] - 2.8).abs() < 1e-8);
        assert!((g[1] - 6.0).abs() < 1e-8);
    }
}
