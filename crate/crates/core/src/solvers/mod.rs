//! Numerical subroutines: box projection, the prox step for general
//! constraints, and the benchmark solvers used to score online learners.

mod alm;
mod bench;
mod descent;
mod dual;
mod prox;
mod qp;

pub use alm::{solve_nlp, AlmSettings, NlpProblem};
pub use bench::{
    best_static, offline_optimum, per_slot_optimum, uniform_slack, OfflineSolution,
    SaddleSolveReport, SolverSettings, OFFLINE_SIZE_LIMIT,
};
pub use descent::{minimize_over_box, DescentOutcome};
pub use dual::{dual_function_value, DualFunctionValue};
pub use prox::{solve_prox_general, ProxSettings};
pub use qp::{solve_box_qp, BoxQp, QpSolution};

use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox};

/// Euclidean projection onto the box (componentwise clamp).
pub fn project_box<T: Scalar>(x: &[T], bx: &FeasibleBox<T>) -> DecisionVector<T> {
    DecisionVector::new(bx.project(x))
}

/// Max-norm KKT residual pieces for `min F s.t. G ≤ 0, z ∈ box`.
pub(crate) fn kkt_residual<T: Scalar>(
    z: &[T],
    lagrangian_gradient: &[T],
    constraint_values: &[T],
    multiplier: &[T],
    bx: &FeasibleBox<T>,
) -> T {
    let feas = constraint_values
        .iter()
        .fold(T::zero(), |m, &g| m.max(g));
    let stat = z
        .iter()
        .zip(lagrangian_gradient)
        .zip(bx.lower().iter().zip(bx.upper()))
        .fold(T::zero(), |m, ((&zi, &gi), (&l, &u))| {
            m.max((zi - (zi - gi).max(l).min(u)).abs())
        });
    let comp = crate::linalg::dot(multiplier, constraint_values).abs();
    feas.max(stat).max(comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let b = FeasibleBox::uniform(2, 0.0, 10.0).unwrap();
        assert_eq!(project_box(&[5.0, 5.0], &b).as_slice(), &[5.0, 5.0]);
        assert_eq!(project_box(&[-1.0, 12.0], &b).as_slice(), &[0.0, 10.0]);
        let b1 = FeasibleBox::uniform(1, 0.0, 2.0).unwrap();
        assert_eq!(project_box(&[3.0], &b1).as_slice(), &[2.0]);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            x in prop::collection::vec(-20.0f64..20.0, 3),
            y in prop::collection::vec(-20.0f64..20.0, 3),
        ) {
            let b = FeasibleBox::new(vec![0.0, -1.0, 2.0], vec![10.0, 1.0, 2.5]).unwrap();
            let px = project_box(&x, &b);
            let py = project_box(&y, &b);
            prop_assert_eq!(project_box(&px, &b), px.clone());
            prop_assert!(crate::linalg::distance(&px, &py) <= crate::linalg::distance(&x, &y) + 1e-12);
        }
    }
}
