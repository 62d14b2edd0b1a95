//! Prox step of the learner for constraints without a closed form.
//!
//! Minimises `gᵀ(x − x_prev) + λᵀc(x) + ‖x − x_prev‖²/(2α)` over the box by
//! projected gradient with backtracking. The objective is `1/α`-strongly
//! convex, so the iteration converges linearly.

use crate::error::{argument, MospError, Result};
use crate::linalg;
use crate::oracle::Constraint;
use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector};

use super::descent::sufficient_decrease;

#[derive(Debug, Clone, Copy)]
pub struct ProxSettings<T> {
    /// Stop once the step-to-step displacement (at stepsize `α`) falls below this.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for ProxSettings<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-8).max(T::epsilon() * T::of(64.0)),
            max_iterations: 10_000,
        }
    }
}

pub fn solve_prox_general<T: Scalar>(
    grad: &[T],
    g: &Constraint<T>,
    lambda: &MultiplierVector<T>,
    x_prev: &[T],
    alpha: T,
    bx: &FeasibleBox<T>,
    settings: &ProxSettings<T>,
) -> Result<DecisionVector<T>> {
    bx.check_dim(grad, "gradient")?;
    bx.check_dim(x_prev, "previous iterate")?;
    if lambda.len() != g.dim_out() {
        return Err(argument(format!(
            "multiplier has length {} but the constraint has {} rows",
            lambda.len(),
            g.dim_out()
        )));
    }
    if !(alpha > T::zero()) {
        return Err(argument("prox stepsize must be positive"));
    }
    if !linalg::all_finite(grad) {
        return Err(MospError::OracleFailure("non-finite loss gradient".into()));
    }

    let two_alpha = T::of(2.0) * alpha;
    let objective = |x: &[T]| -> Result<T> {
        let c = g.checked_value(x)?;
        let lin = linalg::dot(grad, &linalg::sub(x, x_prev));
        Ok(lin + linalg::dot(lambda, &c) + linalg::norm_sq(&linalg::sub(x, x_prev)) / two_alpha)
    };
    let gradient = |x: &[T]| -> Result<Vec<T>> {
        let mut out = g.weighted_gradient(x, lambda);
        if !linalg::all_finite(&out) {
            return Err(MospError::OracleFailure(
                "non-finite constraint gradient".into(),
            ));
        }
        for i in 0..out.len() {
            out[i] += grad[i] + (x[i] - x_prev[i]) / alpha;
        }
        Ok(out)
    };

    // Exact when the constraint term vanishes.
    let start: Vec<T> = x_prev
        .iter()
        .zip(grad)
        .map(|(&xp, &gi)| xp - alpha * gi)
        .collect();
    let mut x = bx.project(&start);
    let mut fx = objective(&x)?;
    let mut gx = gradient(&x)?;
    let mut last_move = T::infinity();
    // step only ever shrinks, so an accepted step is never retried larger
    let mut eta = alpha;

    for _ in 0..settings.max_iterations {
        let (x_new, f_new, g_new) = loop {
            let cand: Vec<T> = x.iter().zip(&gx).map(|(&xi, &gi)| xi - eta * gi).collect();
            let cand = bx.project(&cand);
            let d = linalg::sub(&cand, &x);
            let f_cand = objective(&cand)?;
            let g_cand = gradient(&cand)?;
            if sufficient_decrease(fx, &gx, f_cand, &g_cand, &d, T::one() / eta) {
                break (cand, f_cand, g_cand);
            }
            eta = eta / T::of(2.0);
            if eta < alpha * T::epsilon() {
                return Err(MospError::SolverFailure {
                    context: "prox backtracking collapsed".into(),
                    residual: last_move.as_f64(),
                    iterations: 0,
                });
            }
        };
        // displacement normalised to the nominal stepsize
        last_move = linalg::distance(&x_new, &x) * (alpha / eta);
        x = x_new;
        fx = f_new;
        gx = g_new;
        if last_move < settings.tolerance {
            return Ok(DecisionVector::new(x));
        }
    }
    Err(MospError::SolverFailure {
        context: "prox step did not converge".into(),
        residual: last_move.as_f64(),
        iterations: settings.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::FnConstraint;
    use std::sync::Arc;

    fn quad_constraint() -> Constraint<f64> {
        Constraint::general(FnConstraint::new(
            1,
            |x: &[f64]| vec![x[0] * x[0] - 1.0],
            |x: &[f64], w: &[f64]| vec![2.0 * x[0] * w[0]],
        ))
    }

    /// Fine-grid minimisation of the 1-D prox objective; independent of the solver.
    fn grid_oracle(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn quadratic_constraint_prox_matches_grid() {
        // objective x^2 - 1 + (x-1)^2/2 on [0, 2]
        let oracle = grid_oracle(|x| x * x - 1.0 + (x - 1.0).powi(2) / 2.0, 0.0, 2.0, 1e-6);
        assert!((oracle - 1.0 / 3.0).abs() < 1e-6);

        let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
        let lambda = MultiplierVector::new(vec![1.0]).unwrap();
        let x = solve_prox_general(
            &[0.0],
            &quad_constraint(),
            &lambda,
            &[1.0],
            1.0,
            &bx,
            &ProxSettings::default(),
        )
        .unwrap();
        assert!((x[0] - oracle).abs() < 1e-6);
    }

    #[test]
    fn zero_multiplier_reduces_to_projected_gradient() {
        let bx = FeasibleBox::uniform(2, 0.0, 10.0).unwrap();
        let x = solve_prox_general(
            &[2.0, -40.0],
            &Constraint::general(FnConstraint::new(
                1,
                |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 100.0],
                |x: &[f64], w: &[f64]| vec![2.0 * x[0] * w[0], 2.0 * x[1] * w[0]],
            )),
            &MultiplierVector::zeros(1),
            &[1.0, 1.0],
            0.5,
            &bx,
            &ProxSettings::default(),
        )
        .unwrap();
        assert_eq!(x.as_slice(), &[0.0, 10.0]);
    }

    #[test]
    fn affine_constraint_matches_closed_form() {
        let a = Arc::new(Matrix::from_rows(&[vec![1.0f64, -2.0, 0.5], vec![0.0, 1.0, 1.0]]));
        let g = Constraint::affine(a.clone(), vec![0.3, -1.0]).unwrap();
        let bx = FeasibleBox::uniform(3, 0.0, 4.0).unwrap();
        let lambda = MultiplierVector::new(vec![1.5, 0.25]).unwrap();
        let grad = [0.4f64, -0.9, 1.2];
        let x_prev = [1.0, 2.0, 3.0];
        let alpha = 0.7;
        let at_lambda = a.tr_mul_vec(&lambda);
        let closed: Vec<f64> = (0..3)
            .map(|i| (x_prev[i] - alpha * grad[i] - alpha * at_lambda[i]).clamp(0.0, 4.0))
            .collect();
        let x =
            solve_prox_general(&grad, &g, &lambda, &x_prev, alpha, &bx, &ProxSettings::default())
                .unwrap();
        for i in 0..3 {
            assert!((x[i] - closed[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn non_finite_gradient_is_oracle_failure() {
        let bx = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
        let err = solve_prox_general(
            &[f64::NAN],
            &quad_constraint(),
            &MultiplierVector::zeros(1),
            &[1.0],
            1.0,
            &bx,
            &ProxSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, MospError::OracleFailure(_)));
    }
}
