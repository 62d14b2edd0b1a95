//! Accelerated projected gradient over a box with backtracking and
//! function-value restarts.

use crate::error::{MospError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::types::FeasibleBox;

#[derive(Debug, Clone)]
pub struct DescentOutcome<T> {
    pub point: Vec<T>,
    pub value: T,
    /// `‖x − P(x − ∇f(x))‖∞` at the returned point.
    pub residual: T,
    pub iterations: usize,
}

fn stationarity<T: Scalar>(x: &[T], g: &[T], bx: &FeasibleBox<T>) -> T {
    x.iter()
        .zip(g)
        .zip(bx.lower().iter().zip(bx.upper()))
        .fold(T::zero(), |m, ((&xi, &gi), (&l, &u))| {
            m.max((xi - (xi - gi).max(l).min(u)).abs())
        })
}

/// Upper-model test `f(c) ≤ f(y) + ∇f(y)ᵀd + (L/2)‖d‖²`. Once the decrease is
/// lost in rounding, the sufficient gradient condition
/// `(∇f(c) − ∇f(y))ᵀd ≤ (L/2)‖d‖²` is used instead.
pub(crate) fn sufficient_decrease<T: Scalar>(
    fy: T,
    gy: &[T],
    f_cand: T,
    g_cand: &[T],
    d: &[T],
    lip: T,
) -> bool {
    let half_l_dd = lip / T::of(2.0) * linalg::norm_sq(d);
    let resolvable = (f_cand - fy).abs() > T::epsilon() * T::of(1e3) * (T::one() + fy.abs());
    if resolvable {
        f_cand <= fy + linalg::dot(gy, d) + half_l_dd
    } else {
        let curv: T = g_cand
            .iter()
            .zip(gy)
            .zip(d)
            .map(|((&a, &b), &di)| (a - b) * di)
            .sum();
        curv <= half_l_dd
    }
}

/// Minimises a smooth convex function over `bx` until the projected-gradient
/// residual drops to `tol`.
pub fn minimize_over_box<T, F, G>(
    value: F,
    gradient: G,
    start: &[T],
    bx: &FeasibleBox<T>,
    tol: T,
    max_iterations: usize,
) -> Result<DescentOutcome<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
    G: Fn(&[T]) -> Vec<T>,
{
    let mut x = bx.project(start);
    let mut fx = value(&x);
    let mut gx = gradient(&x);
    if !fx.is_finite() || !linalg::all_finite(&gx) {
        return Err(MospError::OracleFailure(
            "non-finite objective at the starting point".into(),
        ));
    }
    let mut residual = stationarity(&x, &gx, bx);
    if residual <= tol {
        return Ok(DescentOutcome {
            point: x,
            value: fx,
            residual,
            iterations: 0,
        });
    }

    let mut lip = T::one();
    let mut y = x.clone();
    let mut fy = fx;
    let mut gy = gx.clone();
    let mut momentum = T::one();
    let two = T::of(2.0);

    for it in 1..=max_iterations {
        // backtracking on the quadratic upper model at y
        let (x_new, f_new, g_new) = loop {
            let cand: Vec<T> = y
                .iter()
                .zip(&gy)
                .map(|(&yi, &gi)| yi - gi / lip)
                .collect();
            let cand = bx.project(&cand);
            let d = linalg::sub(&cand, &y);
            let f_cand = value(&cand);
            let g_cand = gradient(&cand);
            if f_cand.is_finite() && sufficient_decrease(fy, &gy, f_cand, &g_cand, &d, lip) {
                break (cand, f_cand, g_cand);
            }
            lip = lip * two;
            if !lip.is_finite() || lip > T::max_value() / T::of(4.0) {
                return Err(MospError::SolverFailure {
                    context: "projected gradient backtracking diverged".into(),
                    residual: residual.as_f64(),
                    iterations: it,
                });
            }
        };

        if f_new > fx {
            // restart momentum from the last accepted point
            momentum = T::one();
            y = x.clone();
            fy = fx;
            gy = gx.clone();
            continue;
        }

        let next_momentum =
            (T::one() + (T::one() + T::of(4.0) * momentum * momentum).sqrt()) / two;
        let beta = (momentum - T::one()) / next_momentum;
        y = x_new
            .iter()
            .zip(&x)
            .map(|(&a, &b)| a + beta * (a - b))
            .collect();
        y = bx.project(&y);
        momentum = next_momentum;
        x = x_new;
        fx = f_new;
        gx = g_new;
        residual = stationarity(&x, &gx, bx);
        if residual <= tol {
            return Ok(DescentOutcome {
                point: x,
                value: fx,
                residual,
                iterations: it,
            });
        }
        fy = value(&y);
        gy = gradient(&y);
        lip = (lip * T::of(0.9)).max(T::epsilon());
    }
    Err(MospError::SolverFailure {
        context: "accelerated projected gradient hit its iteration cap".into(),
        residual: residual.as_f64(),
        iterations: max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_box_constrained_quadratic() {
        // (x-3)^2 + 10 (y+1)^2 over [0,2]x[0,2] -> (2, 0)
        let bx = FeasibleBox::uniform(2, 0.0, 2.0).unwrap();
        let out = minimize_over_box(
            |x: &[f64]| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2),
            |x: &[f64]| vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)],
            &[1.0, 1.0],
            &bx,
            1e-12,
            10_000,
        )
        .unwrap();
        assert!((out.point[0] - 2.0).abs() < 1e-12);
        assert!(out.point[1].abs() < 1e-12);
    }

    #[test]
    fn ill_conditioned_interior_minimum() {
        let bx = FeasibleBox::uniform(2, -10.0, 10.0).unwrap();
        let out = minimize_over_box(
            |x: &[f64]| 1e3 * (x[0] - 1.0).powi(2) + 1e-2 * (x[1] - 2.0).powi(2),
            |x: &[f64]| vec![2e3 * (x[0] - 1.0), 2e-2 * (x[1] - 2.0)],
            &[0.0, 0.0],
            &bx,
            1e-10,
            100_000,
        )
        .unwrap();
        assert!((out.point[0] - 1.0).abs() < 1e-8);
        assert!((out.point[1] - 2.0).abs() < 1e-6);
    }
}
