//! Domain newtypes shared across the crate.

use std::ops::Deref;

use crate::error::{argument, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Primal action `x_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector<T>(Vec<T>);

/// Dual iterate `λ_t`, componentwise non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierVector<T>(Vec<T>);

impl<T: Scalar> DecisionVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

impl<T: Scalar> MultiplierVector<T> {
    /// Builds a multiplier vector, rejecting negative or non-finite entries.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(argument("multipliers must be finite and non-negative"));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![T::zero(); m])
    }

    /// Applies the positive projection `[v]⁺`; the result is always valid.
    pub fn from_positive_part(v: &[T]) -> Self {
        Self(linalg::positive_part(v))
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

impl<T> Deref for DecisionVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> Deref for MultiplierVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Axis-aligned feasible set `{lower ≤ x ≤ upper}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBox<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> FeasibleBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(argument(format!(
                "box bounds differ in length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(argument(format!("invalid box bounds at coordinate {i}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[0, upper]`, the form used by the network application.
    pub fn from_upper(upper: Vec<T>) -> Result<Self> {
        Self::new(vec![T::zero(); upper.len()], upper)
    }

    pub fn uniform(n: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    /// Diameter `R = ‖upper − lower‖`.
    pub fn radius(&self) -> T {
        linalg::distance(&self.upper, &self.lower)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Componentwise clamp into the box.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| v.max(l).min(u))
            .collect()
    }

    pub fn lower_corner(&self) -> DecisionVector<T> {
        DecisionVector::new(self.lower.clone())
    }

    /// Vertex selected by the bits of `mask` (bit `i` set → upper bound).
    pub fn vertex(&self, mask: u64) -> Vec<T> {
        (0..self.dim())
            .map(|i| {
                if (mask >> i) & 1 == 1 {
                    self.upper[i]
                } else {
                    self.lower[i]
                }
            })
            .collect()
    }

    pub(crate) fn check_dim(&self, x: &[T], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(argument(format!(
                "{what} has dimension {} but the box has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Primal stepsize `alpha` and dual stepsize `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizePair<T> {
    alpha: T,
    mu: T,
}

impl<T: Scalar> StepsizePair<T> {
    pub fn new(alpha: T, mu: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) || !(mu > T::zero() && mu.is_finite()) {
            return Err(argument("stepsizes must be positive and finite"));
        }
        Ok(Self { alpha, mu })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn mu(&self) -> T {
        self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(FeasibleBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn box_radius_is_diagonal_length() {
        let b = FeasibleBox::from_upper(vec![3.0, 4.0]).unwrap();
        assert_eq!(b.radius(), 5.0);
    }

    #[test]
    fn multipliers_reject_negative_entries() {
        assert!(MultiplierVector::new(vec![0.0, -1e-12]).is_err());
        assert!(MultiplierVector::new(vec![0.0f64, 2.0]).is_ok());
    }

    #[test]
    fn stepsizes_must_be_positive() {
        assert!(StepsizePair::new(0.0, 1.0).is_err());
        assert!(StepsizePair::new(1.0, f64::NAN).is_err());
    }
}
