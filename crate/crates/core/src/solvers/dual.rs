//! Per-slot dual function `D_t(λ) = min_{x ∈ X} f_t(x) + λᵀ g_t(x)`.

use crate::error::{argument, Result};
use crate::linalg;
use crate::oracle::{SeparableQuadratic, SlotProblem};
use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector};

use super::descent::minimize_over_box;

#[derive(Debug, Clone)]
pub struct DualFunctionValue<T> {
    pub value: T,
    pub minimizer: DecisionVector<T>,
}

pub fn dual_function_value<T: Scalar>(
    problem: &SlotProblem<T>,
    lambda: &MultiplierVector<T>,
    bx: &FeasibleBox<T>,
) -> Result<DualFunctionValue<T>> {
    if lambda.len() != problem.constraint.dim_out() {
        return Err(argument("multiplier length differs from the constraint"));
    }
    if problem.loss.dim() != bx.dim() {
        return Err(argument("loss dimension differs from the box"));
    }
    let x = if let Some((q, a, _)) = problem.quadratic_affine() {
        let at_lambda = a.tr_mul_vec(lambda);
        (0..bx.dim())
            .map(|i| {
                SeparableQuadratic::scalar_argmin(
                    q.curvature()[i],
                    q.linear()[i] + at_lambda[i],
                    bx.lower()[i],
                    bx.upper()[i],
                )
            })
            .collect()
    } else {
        let value = |x: &[T]| {
            problem.loss.value(x) + linalg::dot(lambda, &problem.constraint.value(x))
        };
        let gradient = |x: &[T]| {
            let mut g = problem.constraint.weighted_gradient(x, lambda);
            linalg::axpy(T::one(), &problem.loss.gradient(x), &mut g);
            g
        };
        let tol = T::of(1e-9).max(T::epsilon() * T::of(1e3));
        minimize_over_box(value, gradient, bx.lower(), bx, tol, 200_000)?.point
    };
    let value = problem.checked_value(&x)? + linalg::dot(lambda, &problem.constraint.checked_value(&x)?);
    Ok(DualFunctionValue {
        value,
        minimizer: DecisionVector::new(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::{Constraint, FnLoss};
    use std::sync::Arc;

    fn one_dim(lambda_coeff: f64) -> SlotProblem<f64> {
        SlotProblem::new(
            SeparableQuadratic::diagonal(vec![1.0]).unwrap(),
            Constraint::affine(Arc::new(Matrix::from_rows(&[vec![lambda_coeff]])), vec![0.0])
                .unwrap(),
        )
    }

    #[test]
    fn scalar_quadratic_matches_grid() {
        // x² + λ·(−x) with λ = 2 gives effective linear term −2
        let p = one_dim(-1.0);
        let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
        let d = dual_function_value(&p, &MultiplierVector::new(vec![2.0]).unwrap(), &bx).unwrap();
        let (mut best_v, mut best_x) = (f64::INFINITY, 0.0);
        for i in 0..=2_000_000 {
            let x = i as f64 * 1e-6;
            let v = x * x - 2.0 * x;
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        }
        assert!((d.minimizer[0] - best_x).abs() < 1e-6);
        assert!((d.value - best_v).abs() < 1e-9);
    }

    #[test]
    fn zero_multiplier_gives_loss_minimum() {
        let p = one_dim(5.0);
        let bx = FeasibleBox::uniform(1, 1.0, 2.0).unwrap();
        let d = dual_function_value(&p, &MultiplierVector::zeros(1), &bx).unwrap();
        assert_eq!(d.minimizer[0], 1.0);
        assert_eq!(d.value, 1.0);
    }

    #[test]
    fn general_path_agrees_with_closed_form() {
        let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
        let lambda = MultiplierVector::new(vec![2.0]).unwrap();
        let closed = dual_function_value(&one_dim(-1.0), &lambda, &bx).unwrap();
        let general = SlotProblem::new(
            FnLoss::new(1, |x: &[f64]| x[0] * x[0], |x: &[f64]| vec![2.0 * x[0]]),
            Constraint::affine(Arc::new(Matrix::from_rows(&[vec![-1.0]])), vec![0.0]).unwrap(),
        );
        let d = dual_function_value(&general, &lambda, &bx).unwrap();
        assert!((d.value - closed.value).abs() < 1e-9);
    }
}
