//! Augmented Lagrangian method for smooth convex programs over a box with
//! inequality constraints, used when the problem has no quadratic-affine
//! structure. Inner problems are solved by accelerated projected gradient.

use crate::error::{MospError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector};

use super::bench::SaddleSolveReport;
use super::descent::minimize_over_box;
use super::kkt_residual;

/// `min F(z) s.t. G(z) ≤ 0, z ∈ box` with convex, differentiable `F` and `G`.
pub trait NlpProblem<T: Scalar> {
    fn dim(&self) -> usize;
    fn constraint_count(&self) -> usize;
    fn objective(&self, z: &[T]) -> T;
    fn objective_gradient(&self, z: &[T]) -> Vec<T>;
    fn constraints(&self, z: &[T]) -> Vec<T>;
    /// Gradient of `wᵀ G(z)`.
    fn constraint_weighted_gradient(&self, z: &[T], w: &[T]) -> Vec<T>;
}

#[derive(Debug, Clone, Copy)]
pub struct AlmSettings<T> {
    pub tolerance: T,
    pub max_outer: usize,
    pub max_inner: usize,
    pub initial_penalty: T,
}

impl<T: Scalar> Default for AlmSettings<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-6),
            max_outer: 60,
            max_inner: 200_000,
            initial_penalty: T::of(10.0),
        }
    }
}

pub fn solve_nlp<T: Scalar, P: NlpProblem<T> + ?Sized>(
    problem: &P,
    bx: &FeasibleBox<T>,
    start: &[T],
    settings: &AlmSettings<T>,
) -> Result<SaddleSolveReport<T>> {
    let m = problem.constraint_count();
    let mut y = vec![T::zero(); m];
    let mut rho = settings.initial_penalty;
    let mut z = bx.project(start);
    let mut last_violation = T::infinity();
    let mut total_iterations = 0;
    let mut kkt = T::infinity();
    let half = T::of(0.5);

    for _ in 0..settings.max_outer {
        let shifted = |z: &[T], y: &[T], rho: T| -> Vec<T> {
            problem
                .constraints(z)
                .iter()
                .zip(y)
                .map(|(&g, &yi)| (yi + rho * g).max(T::zero()))
                .collect()
        };
        let value = |z: &[T]| -> T {
            let s = shifted(z, &y, rho);
            let pen: T = s
                .iter()
                .zip(&y)
                .map(|(&si, &yi)| si * si - yi * yi)
                .sum();
            problem.objective(z) + pen * half / rho
        };
        let gradient = |z: &[T]| -> Vec<T> {
            let s = shifted(z, &y, rho);
            let mut g = problem.constraint_weighted_gradient(z, &s);
            linalg::axpy(T::one(), &problem.objective_gradient(z), &mut g);
            g
        };
        let inner_tol = (settings.tolerance * T::of(0.1)).max(T::epsilon() * T::of(1e3));
        let out = minimize_over_box(value, gradient, &z, bx, inner_tol, settings.max_inner)?;
        total_iterations += out.iterations;
        z = out.point;
        y = shifted(&z, &y, rho);

        let g = problem.constraints(&z);
        if !linalg::all_finite(&g) || !linalg::all_finite(&z) {
            return Err(MospError::OracleFailure(
                "non-finite constraint value inside the augmented Lagrangian".into(),
            ));
        }
        let mut lag = problem.constraint_weighted_gradient(&z, &y);
        linalg::axpy(T::one(), &problem.objective_gradient(&z), &mut lag);
        kkt = kkt_residual(&z, &lag, &g, &y, bx);
        if kkt <= settings.tolerance {
            return Ok(SaddleSolveReport {
                solution: DecisionVector::new(z),
                multiplier: MultiplierVector::new(y)?,
                kkt_residual: kkt,
                iterations: total_iterations,
            });
        }
        let violation = g.iter().fold(T::zero(), |a, &v| a.max(v));
        if violation > last_violation * T::of(0.25) {
            rho = rho * T::of(10.0);
        }
        last_violation = violation;
        if !rho.is_finite() || rho > T::of(1e14) {
            break;
        }
    }
    if last_violation > settings.tolerance {
        return Err(MospError::Infeasible {
            margin: -last_violation.as_f64(),
        });
    }
    Err(MospError::SolverFailure {
        context: "augmented Lagrangian did not reach the KKT tolerance".into(),
        residual: kkt.as_f64(),
        iterations: total_iterations,
    })
}
