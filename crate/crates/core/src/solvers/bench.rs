//! Benchmark solvers: per-slot optimum, full-horizon offline optimum, best
//! static decision, and the uniform-slack (Slater) linear program.

use std::sync::Arc;

use crate::error::{argument, MospError, Result};
use crate::linalg::{self, Matrix};
use crate::oracle::{Constraint, SlotProblem};
use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector};

use super::alm::{solve_nlp, AlmSettings, NlpProblem};
use super::qp::{run_ipm, BoxQp};

/// Largest `T·n` the coupled offline solve accepts.
pub const OFFLINE_SIZE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings<T> {
    /// Max-norm KKT residual accepted as converged.
    pub tolerance: T,
    pub max_ipm_iterations: usize,
    pub alm: AlmSettings<T>,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        let tolerance = T::of(1e-6);
        Self {
            tolerance,
            max_ipm_iterations: 200,
            alm: AlmSettings {
                tolerance,
                ..AlmSettings::default()
            },
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn with_tolerance(tolerance: T) -> Self {
        let mut s = Self::default();
        s.tolerance = tolerance;
        s.alm.tolerance = tolerance;
        s
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolveReport<T> {
    pub solution: DecisionVector<T>,
    pub multiplier: MultiplierVector<T>,
    pub kkt_residual: T,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct OfflineSolution<T> {
    pub decisions: Vec<DecisionVector<T>>,
    /// Shared multiplier of the aggregate constraint `Σ g_t ≤ 0`.
    pub multiplier: MultiplierVector<T>,
    pub kkt_residual: T,
    pub iterations: usize,
}

impl<T: Scalar> OfflineSolution<T> {
    pub fn total_cost(&self, problems: &[SlotProblem<T>]) -> T {
        problems
            .iter()
            .zip(&self.decisions)
            .map(|(p, x)| p.loss.value(x))
            .sum()
    }
}

/// Largest `δ` with `C z + δ·1 ≤ e` for some `z` in the box, and a witness.
/// Negative when the constraints have no common point in the box.
pub fn uniform_slack<T: Scalar>(
    c: &Matrix<T>,
    e: &[T],
    bx: &FeasibleBox<T>,
) -> Result<(T, DecisionVector<T>)> {
    let n = bx.dim();
    let m = e.len();
    if c.cols() != n || c.rows() != m {
        return Err(argument("slack LP dimensions are inconsistent"));
    }
    if m == 0 {
        return Ok((T::infinity(), bx.lower_corner()));
    }
    // δ is bracketed by the row-wise extremes of C z over the box
    let (mut d_lo, mut d_hi) = (T::infinity(), T::infinity());
    for a in 0..m {
        let (mut lo, mut hi) = (T::zero(), T::zero());
        for (i, &cij) in c.row(a).iter().enumerate() {
            let (u, v) = (cij * bx.lower()[i], cij * bx.upper()[i]);
            lo += u.min(v);
            hi += u.max(v);
        }
        d_hi = d_hi.min(e[a] - lo);
        d_lo = d_lo.min(e[a] - hi);
    }
    let pad = T::one() + (d_hi - d_lo).abs();
    let mut ext = Matrix::zeros(m, n + 1);
    for a in 0..m {
        for i in 0..n {
            ext.set(a, i, c.get(a, i));
        }
        ext.set(a, n, T::one());
    }
    let mut lower = bx.lower().to_vec();
    let mut upper = bx.upper().to_vec();
    lower.push(d_lo - pad);
    upper.push(d_hi + pad);
    let ext_box = FeasibleBox::new(lower, upper)?;
    let curvature = vec![T::zero(); n + 1];
    let mut linear = vec![T::zero(); n + 1];
    linear[n] = -T::one();
    let lp = BoxQp {
        curvature: &curvature,
        linear: &linear,
        constraints: &ext,
        rhs: e,
        bounds: &ext_box,
    };
    let scale = e.iter().fold(T::one(), |a, &v| a.max(v.abs()));
    let (sol, _) = run_ipm(&lp, T::of(1e-9) * scale, 200)?;
    // certified value: the slack the witness actually achieves
    let witness = bx.project(&sol.z[..n]);
    let cz = c.mul_vec(&witness);
    let margin = (0..m).fold(T::infinity(), |acc, a| acc.min(e[a] - cz[a]));
    Ok((margin, DecisionVector::new(witness)))
}

fn same_matrix<T: Scalar>(a: &Arc<Matrix<T>>, b: &Arc<Matrix<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn infeasible_or<T: Scalar>(
    err: MospError,
    c: &Matrix<T>,
    e: &[T],
    bx: &FeasibleBox<T>,
) -> MospError {
    match uniform_slack(c, e, bx) {
        Ok((margin, _)) if margin <= T::zero() => MospError::Infeasible {
            margin: margin.as_f64(),
        },
        _ => err,
    }
}

fn solve_structured_qp<T: Scalar>(
    curvature: &[T],
    linear: &[T],
    c: &Matrix<T>,
    e: &[T],
    bx: &FeasibleBox<T>,
    settings: &SolverSettings<T>,
) -> Result<SaddleSolveReport<T>> {
    let qp = BoxQp {
        curvature,
        linear,
        constraints: c,
        rhs: e,
        bounds: bx,
    };
    let (sol, converged) = run_ipm(&qp, settings.tolerance, settings.max_ipm_iterations)?;
    if !converged {
        let err = MospError::SolverFailure {
            context: "benchmark interior point solve".into(),
            residual: sol.kkt_residual.as_f64(),
            iterations: settings.max_ipm_iterations,
        };
        return Err(infeasible_or(err, c, e, bx));
    }
    Ok(SaddleSolveReport {
        solution: DecisionVector::new(sol.z),
        multiplier: MultiplierVector::from_positive_part(&sol.multipliers),
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
    })
}

/// Hessian diagonal and linear term of a separable quadratic loss.
fn quadratic_terms<T: Scalar>(p: &SlotProblem<T>) -> Option<(Vec<T>, Vec<T>)> {
    let q = p.loss.as_separable_quadratic()?;
    Some((
        q.curvature().iter().map(|&w| w + w).collect(),
        q.linear().to_vec(),
    ))
}

struct SingleSlot<'a, T: Scalar>(&'a SlotProblem<T>);

impl<'a, T: Scalar> NlpProblem<T> for SingleSlot<'a, T> {
    fn dim(&self) -> usize {
        self.0.loss.dim()
    }
    fn constraint_count(&self) -> usize {
        self.0.constraint.dim_out()
    }
    fn objective(&self, z: &[T]) -> T {
        self.0.loss.value(z)
    }
    fn objective_gradient(&self, z: &[T]) -> Vec<T> {
        self.0.loss.gradient(z)
    }
    fn constraints(&self, z: &[T]) -> Vec<T> {
        self.0.constraint.value(z)
    }
    fn constraint_weighted_gradient(&self, z: &[T], w: &[T]) -> Vec<T> {
        self.0.constraint.weighted_gradient(z, w)
    }
}

/// Per-slot minimiser `x_t* = argmin f_t(x) s.t. g_t(x) ≤ 0, x ∈ X`.
pub fn per_slot_optimum<T: Scalar>(
    problem: &SlotProblem<T>,
    bx: &FeasibleBox<T>,
    settings: &SolverSettings<T>,
) -> Result<SaddleSolveReport<T>> {
    if problem.loss.dim() != bx.dim() {
        return Err(argument("loss dimension differs from the box"));
    }
    if let Some((q, a, b)) = problem.quadratic_affine() {
        let h: Vec<T> = q.curvature().iter().map(|&w| w + w).collect();
        let e: Vec<T> = b.iter().map(|&v| -v).collect();
        return solve_structured_qp(&h, q.linear(), a, &e, bx, settings);
    }
    solve_nlp(&SingleSlot(problem), bx, bx.lower(), &settings.alm)
}

struct Stacked<'a, T: Scalar> {
    problems: &'a [SlotProblem<T>],
    n: usize,
}

impl<'a, T: Scalar> NlpProblem<T> for Stacked<'a, T> {
    fn dim(&self) -> usize {
        self.n * self.problems.len()
    }
    fn constraint_count(&self) -> usize {
        self.problems[0].constraint.dim_out()
    }
    fn objective(&self, z: &[T]) -> T {
        self.problems
            .iter()
            .zip(z.chunks(self.n))
            .map(|(p, x)| p.loss.value(x))
            .sum()
    }
    fn objective_gradient(&self, z: &[T]) -> Vec<T> {
        self.problems
            .iter()
            .zip(z.chunks(self.n))
            .flat_map(|(p, x)| p.loss.gradient(x))
            .collect()
    }
    fn constraints(&self, z: &[T]) -> Vec<T> {
        let mut total = vec![T::zero(); self.constraint_count()];
        for (p, x) in self.problems.iter().zip(z.chunks(self.n)) {
            linalg::axpy(T::one(), &p.constraint.value(x), &mut total);
        }
        total
    }
    fn constraint_weighted_gradient(&self, z: &[T], w: &[T]) -> Vec<T> {
        self.problems
            .iter()
            .zip(z.chunks(self.n))
            .flat_map(|(p, x)| p.constraint.weighted_gradient(x, w))
            .collect()
    }
}

fn check_sequence<T: Scalar>(problems: &[SlotProblem<T>], bx: &FeasibleBox<T>) -> Result<()> {
    let Some(first) = problems.first() else {
        return Err(argument("problem sequence is empty"));
    };
    let m = first.constraint.dim_out();
    if problems
        .iter()
        .any(|p| p.loss.dim() != bx.dim() || p.constraint.dim_out() != m)
    {
        return Err(argument("problem dimensions vary across slots"));
    }
    Ok(())
}

/// Full-information optimum of `Σ f_t(x_t)` subject to `Σ g_t(x_t) ≤ 0`.
pub fn offline_optimum<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
    settings: &SolverSettings<T>,
) -> Result<OfflineSolution<T>> {
    check_sequence(problems, bx)?;
    let n = bx.dim();
    let horizon = problems.len();
    if horizon * n > OFFLINE_SIZE_LIMIT {
        return Err(MospError::Resource(format!(
            "offline problem has {} variables, limit is {OFFLINE_SIZE_LIMIT}",
            horizon * n
        )));
    }
    let m = problems[0].constraint.dim_out();
    let mut lower = Vec::with_capacity(horizon * n);
    let mut upper = Vec::with_capacity(horizon * n);
    for _ in 0..horizon {
        lower.extend_from_slice(bx.lower());
        upper.extend_from_slice(bx.upper());
    }
    let big_box = FeasibleBox::new(lower, upper)?;

    let report = if problems.iter().all(|p| p.quadratic_affine().is_some()) {
        let mut h = Vec::with_capacity(horizon * n);
        let mut q = Vec::with_capacity(horizon * n);
        let mut c = Matrix::zeros(m, horizon * n);
        let mut e = vec![T::zero(); m];
        for (t, p) in problems.iter().enumerate() {
            let (ht, qt) = quadratic_terms(p).expect("checked above");
            h.extend(ht);
            q.extend(qt);
            let (_, a, b) = p.quadratic_affine().expect("checked above");
            for r in 0..m {
                for i in 0..n {
                    c.set(r, t * n + i, a.get(r, i));
                }
                e[r] -= b[r];
            }
        }
        solve_structured_qp(&h, &q, &c, &e, &big_box, settings)?
    } else {
        let stacked = Stacked { problems, n };
        solve_nlp(&stacked, &big_box, big_box.lower(), &settings.alm)?
    };
    let decisions = report
        .solution
        .chunks(n)
        .map(|c| DecisionVector::new(c.to_vec()))
        .collect();
    Ok(OfflineSolution {
        decisions,
        multiplier: report.multiplier,
        kkt_residual: report.kkt_residual,
        iterations: report.iterations,
    })
}

struct Static<'a, T: Scalar>(&'a [SlotProblem<T>]);

impl<'a, T: Scalar> NlpProblem<T> for Static<'a, T> {
    fn dim(&self) -> usize {
        self.0[0].loss.dim()
    }
    fn constraint_count(&self) -> usize {
        self.0.iter().map(|p| p.constraint.dim_out()).sum()
    }
    fn objective(&self, z: &[T]) -> T {
        self.0.iter().map(|p| p.loss.value(z)).sum()
    }
    fn objective_gradient(&self, z: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); z.len()];
        for p in self.0 {
            linalg::axpy(T::one(), &p.loss.gradient(z), &mut g);
        }
        g
    }
    fn constraints(&self, z: &[T]) -> Vec<T> {
        self.0.iter().flat_map(|p| p.constraint.value(z)).collect()
    }
    fn constraint_weighted_gradient(&self, z: &[T], w: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); z.len()];
        let mut offset = 0;
        for p in self.0 {
            let m = p.constraint.dim_out();
            linalg::axpy(
                T::one(),
                &p.constraint.weighted_gradient(z, &w[offset..offset + m]),
                &mut g,
            );
            offset += m;
        }
        g
    }
}

/// Best fixed decision in hindsight: `min Σ f_t(x)` subject to `g_t(x) ≤ 0`
/// for every slot. When all slots share the constraint matrix the stacked rows
/// collapse to `A x + max_t b_t ≤ 0`, and the multiplier has `m` entries;
/// otherwise it has one block per slot.
pub fn best_static<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
    settings: &SolverSettings<T>,
) -> Result<SaddleSolveReport<T>> {
    check_sequence(problems, bx)?;
    let n = bx.dim();
    if problems.iter().all(|p| p.quadratic_affine().is_some()) {
        let mut h = vec![T::zero(); n];
        let mut q = vec![T::zero(); n];
        for p in problems {
            let (ht, qt) = quadratic_terms(p).expect("checked above");
            linalg::axpy(T::one(), &ht, &mut h);
            linalg::axpy(T::one(), &qt, &mut q);
        }
        let (_, a0, _) = problems[0].quadratic_affine().expect("checked above");
        let shared = problems.iter().all(|p| match &p.constraint {
            Constraint::Affine { matrix, .. } => same_matrix(matrix, a0),
            Constraint::General(_) => false,
        });
        if shared {
            let mut e = vec![T::infinity(); a0.rows()];
            for p in problems {
                let (_, _, b) = p.quadratic_affine().expect("checked above");
                for (ei, &bi) in e.iter_mut().zip(b) {
                    *ei = ei.min(-bi);
                }
            }
            return solve_structured_qp(&h, &q, a0, &e, bx, settings);
        }
        let rows: usize = problems.iter().map(|p| p.constraint.dim_out()).sum();
        let mut c = Matrix::zeros(rows, n);
        let mut e = Vec::with_capacity(rows);
        let mut r0 = 0;
        for p in problems {
            let (_, a, b) = p.quadratic_affine().expect("checked above");
            for r in 0..a.rows() {
                for i in 0..n {
                    c.set(r0 + r, i, a.get(r, i));
                }
                e.push(-b[r]);
            }
            r0 += a.rows();
        }
        return solve_structured_qp(&h, &q, &c, &e, bx, settings);
    }
    solve_nlp(&Static(problems), bx, bx.lower(), &settings.alm)
}
