//! Regret, fit, optimality gap, variation budgets and the runtime checks of
//! the dual and regret bounds.

use crate::error::{argument, MospError, Result};
use crate::linalg::{self, Matrix};
use crate::oco::RoundTrace;
use crate::oracle::{Constraint, SlotProblem};
use crate::scalar::Scalar;
use crate::solvers::{best_static, dual_function_value, SolverSettings};
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector, StepsizePair};

/// Absolute slack allowed by [`drift_check`], on top of the rounding
/// allowance `4ε Σ_i (|λ_i| + μ|g_i|)²` for the stored `λ_{t+1}`.
pub const DRIFT_SLACK: f64 = 1e-9;

/// Largest box dimension for which box vertices are enumerated.
pub const VERTEX_ENUMERATION_LIMIT: usize = 16;

fn same_len<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(argument(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn cumulative<T: Scalar>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut acc = T::zero();
    it.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

/// Running `Σ_{s≤t} (online_s − benchmark_s)`.
pub fn dynamic_regret<T: Scalar>(online: &[T], benchmark: &[T]) -> Result<Vec<T>> {
    same_len(online, benchmark)?;
    Ok(cumulative(online.iter().zip(benchmark).map(|(&a, &b)| a - b)))
}

/// `Σ f_t(x_t) − Σ f_t(x*)` against the best fixed feasible decision; `None`
/// when no single decision satisfies every slot's constraint.
pub fn static_regret<T: Scalar>(
    online: &[T],
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
    settings: &SolverSettings<T>,
) -> Result<Option<T>> {
    if online.len() != problems.len() {
        return Err(argument("loss series and problem sequence differ in length"));
    }
    match best_static(problems, bx, settings) {
        Ok(report) => {
            let bench: T = problems.iter().map(|p| p.loss.value(&report.solution)).sum();
            Ok(Some(online.iter().copied().sum::<T>() - bench))
        }
        Err(MospError::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Running `‖[Σ_{s≤t} g_s(x_s)]⁺‖`.
pub fn dynamic_fit<T: Scalar>(g_values: &[Vec<T>]) -> Result<Vec<T>> {
    let Some(first) = g_values.first() else {
        return Ok(Vec::new());
    };
    let m = first.len();
    let mut sum = vec![T::zero(); m];
    let mut out = Vec::with_capacity(g_values.len());
    for g in g_values {
        if g.len() != m {
            return Err(argument("constraint values change dimension"));
        }
        linalg::axpy(T::one(), g, &mut sum);
        out.push(linalg::norm(&linalg::positive_part(&sum)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityGap<T> {
    pub gap: T,
    /// Dynamic regret against the per-slot optima.
    pub u1: T,
    /// Per-slot benchmark cost minus offline cost.
    pub u2: T,
}

pub fn optimality_gap<T: Scalar>(
    online: &[T],
    per_slot: &[T],
    offline: &[T],
) -> Result<OptimalityGap<T>> {
    same_len(online, per_slot)?;
    same_len(online, offline)?;
    let sum = |s: &[T]| s.iter().copied().sum::<T>();
    let (on, ps, off) = (sum(online), sum(per_slot), sum(offline));
    Ok(OptimalityGap {
        gap: on - off,
        u1: on - ps,
        u2: ps - off,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintVariation<T> {
    /// `V(g_t)` for each consecutive pair in the supplied sequence.
    pub per_slot: Vec<T>,
    pub max: T,
    pub total: T,
    /// Set when the values come from sampling and may underestimate.
    pub lower_bound: bool,
}

fn box_vertices<T: Scalar>(bx: &FeasibleBox<T>) -> Option<Vec<Vec<T>>> {
    let n = bx.dim();
    (n <= VERTEX_ENUMERATION_LIMIT).then(|| (0..1u64 << n).map(|mask| bx.vertex(mask)).collect())
}

/// Points where a general constraint difference is sampled: a uniform grid
/// with 5 levels per axis when small, box vertices plus the centre otherwise.
fn sample_points<T: Scalar>(bx: &FeasibleBox<T>) -> Result<Vec<Vec<T>>> {
    let n = bx.dim();
    if n <= 7 {
        let levels = 5usize;
        let total = levels.pow(n as u32);
        return Ok((0..total)
            .map(|mut k| {
                (0..n)
                    .map(|i| {
                        let l = k % levels;
                        k /= levels;
                        let frac = T::of_usize(l) / T::of_usize(levels - 1);
                        bx.lower()[i] + frac * (bx.upper()[i] - bx.lower()[i])
                    })
                    .collect()
            })
            .collect());
    }
    let mut pts = box_vertices(bx).ok_or_else(|| {
        MospError::Resource(format!(
            "cannot sample a {n}-dimensional box for general constraint variation"
        ))
    })?;
    pts.push(
        bx.lower()
            .iter()
            .zip(bx.upper())
            .map(|(&l, &u)| (l + u) / T::of(2.0))
            .collect(),
    );
    Ok(pts)
}

fn pair_variation<T: Scalar>(a: &Constraint<T>, b: &Constraint<T>, bx: &FeasibleBox<T>) -> Result<(T, bool)> {
    match (a, b) {
        (
            Constraint::Affine { matrix: ma, offset: ba },
            Constraint::Affine { matrix: mb, offset: bb },
        ) => {
            if std::sync::Arc::ptr_eq(ma, mb) || **ma == **mb {
                let d: Vec<T> = bb.iter().zip(ba).map(|(&y, &x)| y - x).collect();
                return Ok((linalg::norm(&linalg::positive_part(&d)), false));
            }
            let verts = box_vertices(bx).ok_or_else(|| {
                MospError::Resource(format!(
                    "box dimension {} exceeds the vertex enumeration limit",
                    bx.dim()
                ))
            })?;
            let best = verts.iter().fold(T::zero(), |m, v| {
                let d = linalg::sub(&b.value(v), &a.value(v));
                m.max(linalg::norm(&linalg::positive_part(&d)))
            });
            Ok((best, false))
        }
        _ => {
            let best = sample_points(bx)?.iter().fold(T::zero(), |m, v| {
                let d = linalg::sub(&b.value(v), &a.value(v));
                m.max(linalg::norm(&linalg::positive_part(&d)))
            });
            Ok((best, true))
        }
    }
}

/// `V(g_t) = max_{x∈X} ‖[g_{t+1}(x) − g_t(x)]⁺‖` over each consecutive pair.
/// A sequence of `T + 1` slots yields `T` terms.
pub fn constraint_variation<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
) -> Result<ConstraintVariation<T>> {
    let mut per_slot = Vec::with_capacity(problems.len().saturating_sub(1));
    let mut lower_bound = false;
    for w in problems.windows(2) {
        let (v, lb) = pair_variation(&w[0].constraint, &w[1].constraint, bx)?;
        lower_bound |= lb;
        per_slot.push(v);
    }
    let max = per_slot.iter().fold(T::zero(), |m, &v| m.max(v));
    let total = per_slot.iter().copied().sum();
    Ok(ConstraintVariation {
        per_slot,
        max,
        total,
        lower_bound,
    })
}

/// `Σ_t ‖x_t* − x_{t−1}*‖` with `x_0* = x_1*`.
pub fn minimizer_variation<T: Scalar>(benchmark: &[DecisionVector<T>]) -> Result<T> {
    if benchmark.is_empty() {
        return Err(argument("benchmark sequence is empty"));
    }
    Ok(benchmark
        .windows(2)
        .map(|w| linalg::distance(&w[1], &w[0]))
        .sum())
}

/// Largest grid the dual variation search will evaluate (λ points × slot pairs).
pub const DUAL_GRID_LIMIT: usize = 50_000_000;

/// `Σ_t max_λ |D_{t+1}(λ) − D_t(λ)|` with `λ` ranging over `[0, cap]^m`.
///
/// When consecutive slots share the loss and the constraint matrix, the
/// difference is `λᵀ(b_{t+1} − b_t)` and its maximum is exact. Otherwise the
/// maximum is taken over a uniform grid with `levels` points per axis
/// (`m ≤ 2`) together with `extra_points`, and is a lower bound.
pub fn dual_variation<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
    cap: T,
    levels: usize,
    extra_points: &[MultiplierVector<T>],
) -> Result<T> {
    if !(cap >= T::zero()) || levels < 2 {
        return Err(argument("dual grid needs a non-negative cap and at least 2 levels"));
    }
    let Some(first) = problems.first() else {
        return Ok(T::zero());
    };
    let m = first.constraint.dim_out();
    let mut grid: Option<Vec<MultiplierVector<T>>> = None;
    let mut total = T::zero();
    for w in problems.windows(2) {
        if let Some(delta) = shared_structure_offset(&w[0], &w[1]) {
            let pos: T = delta.iter().map(|&d| d.max(T::zero())).sum();
            let neg: T = delta.iter().map(|&d| (-d).max(T::zero())).sum();
            let mut best = cap * pos.max(neg);
            for l in extra_points {
                best = best.max(linalg::dot(l, &delta).abs());
            }
            total += best;
            continue;
        }
        if grid.is_none() {
            if m > 2 {
                return Err(MospError::Resource(format!(
                    "dual grid search needs m ≤ 2, got {m}"
                )));
            }
            let count = levels.pow(m as u32);
            if count.saturating_mul(problems.len()) > DUAL_GRID_LIMIT {
                return Err(MospError::Resource("dual grid is too large".into()));
            }
            let mut pts: Vec<MultiplierVector<T>> = (0..count)
                .map(|mut k| {
                    let v = (0..m)
                        .map(|_| {
                            let l = k % levels;
                            k /= levels;
                            cap * T::of_usize(l) / T::of_usize(levels - 1)
                        })
                        .collect();
                    MultiplierVector::new(v).expect("grid points are non-negative")
                })
                .collect();
            pts.extend(extra_points.iter().cloned());
            grid = Some(pts);
        }
        let mut best = T::zero();
        for l in grid.as_ref().expect("built above") {
            let a = dual_function_value(&w[0], l, bx)?.value;
            let b = dual_function_value(&w[1], l, bx)?.value;
            best = best.max((b - a).abs());
        }
        total += best;
    }
    Ok(total)
}

fn shared_structure_offset<T: Scalar>(a: &SlotProblem<T>, b: &SlotProblem<T>) -> Option<Vec<T>> {
    let (qa, ma, ba) = a.quadratic_affine()?;
    let (qb, mb, bb) = b.quadratic_affine()?;
    let same_matrix = std::sync::Arc::ptr_eq(ma, mb) || **ma == **mb;
    (qa == qb && same_matrix).then(|| bb.iter().zip(ba).map(|(&y, &x)| y - x).collect())
}

/// Per-slot margin `μλ_tᵀg_t + μ²‖g_t‖²/2 − (‖λ_{t+1}‖² − ‖λ_t‖²)/2`,
/// summed per component as `(μg_i − d_i)λ_i + ((μg_i)² − d_i²)/2` with
/// `d = λ_{t+1} − λ_t` so that the large terms cancel before rounding.
pub fn drift_margin<T: Scalar>(trace: &[RoundTrace<T>], mu: T) -> Vec<T> {
    let half = T::of(0.5);
    trace
        .iter()
        .map(|r| {
            r.lambda
                .iter()
                .zip(r.lambda_next.iter())
                .zip(&r.constraint)
                .fold(T::zero(), |acc, ((&l, &n), &g)| {
                    let (s, d) = (mu * g, n - l);
                    acc + (s - d) * l + (s - d) * (s + d) * half
                })
        })
        .collect()
}

/// Per-slot check of `(‖λ_{t+1}‖² − ‖λ_t‖²)/2 ≤ μλ_tᵀg_t + μ²‖g_t‖²/2`.
pub fn drift_check<T: Scalar>(trace: &[RoundTrace<T>], mu: T) -> Vec<bool> {
    let slack = T::of(DRIFT_SLACK);
    let four_eps = T::of(4.0) * T::epsilon();
    drift_margin(trace, mu)
        .into_iter()
        .zip(trace)
        .map(|(m, r)| {
            let scale: T = r
                .lambda
                .iter()
                .zip(&r.constraint)
                .map(|(&l, &g)| {
                    let a = l.abs() + (mu * g).abs();
                    a * a
                })
                .sum();
            m >= -(slack + four_eps * scale)
        })
        .collect()
}

/// Measured constants of the bound checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants<T> {
    /// Bound on `‖∇f_t(x)‖` over the box.
    pub g: T,
    /// Bound on `‖g_t(x)‖` over the box.
    pub m: T,
    /// Box radius.
    pub r: T,
}

fn gradient_bound<T: Scalar>(p: &SlotProblem<T>, bx: &FeasibleBox<T>) -> Result<T> {
    if let Some(q) = p.loss.as_separable_quadratic() {
        // coordinatewise maxima are attained together at one vertex
        let mut s = T::zero();
        for i in 0..bx.dim() {
            let w2 = q.curvature()[i] + q.curvature()[i];
            let a = (w2 * bx.lower()[i] + q.linear()[i]).abs();
            let b = (w2 * bx.upper()[i] + q.linear()[i]).abs();
            s += a.max(b) * a.max(b);
        }
        return Ok(s.sqrt());
    }
    let pts = sample_points(bx)?;
    Ok(pts
        .iter()
        .fold(T::zero(), |m, v| m.max(linalg::norm(&p.loss.gradient(v)))))
}

fn constraint_bound<T: Scalar>(p: &SlotProblem<T>, bx: &FeasibleBox<T>) -> Result<T> {
    if let Constraint::Affine { matrix, offset } = &p.constraint {
        if let Some(verts) = box_vertices(bx) {
            return Ok(verts
                .iter()
                .fold(T::zero(), |m, v| m.max(linalg::norm(&p.constraint.value(v)))));
        }
        return Ok(affine_row_bound(matrix, offset, bx));
    }
    let pts = sample_points(bx)?;
    Ok(pts
        .iter()
        .fold(T::zero(), |m, v| m.max(linalg::norm(&p.constraint.value(v)))))
}

/// `sqrt(Σ_r max_x |a_rᵀx + b_r|²)`, an upper bound on `max_x ‖Ax + b‖`.
fn affine_row_bound<T: Scalar>(a: &Matrix<T>, b: &[T], bx: &FeasibleBox<T>) -> T {
    let mut s = T::zero();
    for r in 0..a.rows() {
        let (mut lo, mut hi) = (b[r], b[r]);
        for (i, &c) in a.row(r).iter().enumerate() {
            let (u, v) = (c * bx.lower()[i], c * bx.upper()[i]);
            lo += u.min(v);
            hi += u.max(v);
        }
        let e = lo.abs().max(hi.abs());
        s += e * e;
    }
    s.sqrt()
}

/// Measures `G`, `M` and `R` over a problem sequence. `G` is exact for
/// separable quadratic losses; `M` is exact for affine constraints on boxes of
/// dimension up to [`VERTEX_ENUMERATION_LIMIT`] and a row-wise upper bound
/// above it. General oracles are sampled.
pub fn measure_constants<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
) -> Result<ProblemConstants<T>> {
    let mut g = T::zero();
    let mut m = T::zero();
    for p in problems {
        g = g.max(gradient_bound(p, bx)?);
        m = m.max(constraint_bound(p, bx)?);
    }
    Ok(ProblemConstants { g, m, r: bx.radius() })
}

/// `λ̄ = μM + (2GR + R²/(2α) + μM²/2) / (ε − V̄(g))`, or `None` when `ε ≤ V̄(g)`.
pub fn dual_bound<T: Scalar>(
    c: &ProblemConstants<T>,
    epsilon: T,
    v_g_max: T,
    steps: &StepsizePair<T>,
) -> Option<T> {
    let gap = epsilon - v_g_max;
    if !(gap > T::zero()) {
        return None;
    }
    let (alpha, mu) = (steps.alpha(), steps.mu());
    let two = T::of(2.0);
    Some(mu * c.m + (two * c.g * c.r + c.r * c.r / (two * alpha) + mu * c.m * c.m / two) / gap)
}

/// Right-hand side of the dynamic regret bound:
/// `R·V(x*)/α + λ̄·V(g) + R²/(2α) + αG²T/2 + μM²(T+1)/2`.
pub fn regret_bound<T: Scalar>(
    c: &ProblemConstants<T>,
    lambda_bar: T,
    v_xstar: T,
    v_g_total: T,
    steps: &StepsizePair<T>,
    horizon: usize,
) -> T {
    let (alpha, mu) = (steps.alpha(), steps.mu());
    let two = T::of(2.0);
    let t = T::of_usize(horizon);
    c.r * v_xstar / alpha
        + lambda_bar * v_g_total
        + c.r * c.r / (two * alpha)
        + alpha * c.g * c.g * t / two
        + mu * c.m * c.m * (t + T::one()) / two
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    HypothesisUnmet,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    pub fn is_failure(self) -> bool {
        self == CheckStatus::Fail
    }
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::HypothesisUnmet => "hypothesis unmet",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    /// `Fit_T ≤ ‖λ_{T+1}‖/μ`, checked on every run.
    pub fit_vs_multiplier: CheckStatus,
    pub fit_final: T,
    pub multiplier_final: T,
    pub lambda_bar: Option<T>,
    pub max_multiplier: T,
    /// `‖λ_t‖ ≤ λ̄` at every slot.
    pub dual_bound: CheckStatus,
    /// `‖λ_{T+1}‖/μ ≤ λ̄/μ`.
    pub fit_bound: CheckStatus,
}

impl<T: Scalar> BoundReport<T> {
    pub fn any_failure(&self) -> bool {
        self.fit_vs_multiplier.is_failure()
            || self.dual_bound.is_failure()
            || self.fit_bound.is_failure()
    }
}

/// Checks the dual and fit bounds on a trace started from `λ_1 = 0` without
/// restarts.
pub fn bound_checks<T: Scalar>(
    trace: &[RoundTrace<T>],
    constants: &ProblemConstants<T>,
    epsilon: T,
    v_g_max: T,
    steps: &StepsizePair<T>,
) -> Result<BoundReport<T>> {
    let Some(last) = trace.last() else {
        return Err(argument("empty trace"));
    };
    let g: Vec<Vec<T>> = trace.iter().map(|r| r.constraint.clone()).collect();
    let fit_final = *dynamic_fit(&g)?.last().expect("non-empty");
    let multiplier_final = last.lambda_next.norm();
    let mu = steps.mu();
    // floating-point accumulation in λ and in Σg differs by a few ulps
    let rounding = T::of(1e-9) * (T::one() + multiplier_final / mu);
    let fit_vs_multiplier = CheckStatus::from_bool(fit_final <= multiplier_final / mu + rounding);

    let max_multiplier = trace
        .iter()
        .map(|r| r.lambda.norm())
        .chain(std::iter::once(multiplier_final))
        .fold(T::zero(), T::max);
    let lambda_bar = dual_bound(constants, epsilon, v_g_max, steps);
    let (dual, fit) = match lambda_bar {
        None => (CheckStatus::HypothesisUnmet, CheckStatus::HypothesisUnmet),
        Some(bar) => (
            CheckStatus::from_bool(max_multiplier <= bar),
            CheckStatus::from_bool(multiplier_final / mu <= bar / mu),
        ),
    };
    Ok(BoundReport {
        fit_vs_multiplier,
        fit_final,
        multiplier_final,
        lambda_bar,
        max_multiplier,
        dual_bound: dual,
        fit_bound: fit,
    })
}

/// Variation measures that enter the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationBudget<T> {
    pub v_g_per_slot: Vec<T>,
    pub v_g_max: T,
    pub v_g_total: T,
    pub v_xstar_total: T,
    pub v_dual_total: Option<T>,
}

impl<T: Scalar> VariationBudget<T> {
    pub fn new(
        constraint: ConstraintVariation<T>,
        v_xstar_total: T,
        v_dual_total: Option<T>,
    ) -> Self {
        Self {
            v_g_per_slot: constraint.per_slot,
            v_g_max: constraint.max,
            v_g_total: constraint.total,
            v_xstar_total,
            v_dual_total,
        }
    }
}

/// Per-slot cumulative performance series for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries<T> {
    pub dynamic_regret: Vec<T>,
    pub dynamic_fit: Vec<T>,
    pub static_regret: Option<Vec<T>>,
    pub average_cost: Vec<T>,
    /// `‖λ_{t+1}‖`
    pub multiplier_norm: Vec<T>,
    pub queue_norm: Option<Vec<T>>,
}

impl<T: Scalar> MetricSeries<T> {
    pub fn from_trace(
        trace: &[RoundTrace<T>],
        per_slot_losses: &[T],
        static_losses: Option<&[T]>,
    ) -> Result<Self> {
        let online: Vec<T> = trace.iter().map(|r| r.loss).collect();
        let g: Vec<Vec<T>> = trace.iter().map(|r| r.constraint.clone()).collect();
        let static_regret = static_losses
            .map(|s| dynamic_regret(&online, s))
            .transpose()?;
        let average_cost = cumulative(online.iter().copied())
            .into_iter()
            .enumerate()
            .map(|(i, c)| c / T::of_usize(i + 1))
            .collect();
        let queue_norm = trace
            .iter()
            .map(|r| r.queue.as_ref().map(|q| linalg::norm(q)))
            .collect::<Option<Vec<T>>>();
        Ok(Self {
            dynamic_regret: dynamic_regret(&online, per_slot_losses)?,
            dynamic_fit: dynamic_fit(&g)?,
            static_regret,
            average_cost,
            multiplier_norm: trace.iter().map(|r| r.lambda_next.norm()).collect(),
            queue_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::SeparableQuadratic;
    use std::sync::Arc;

    #[test]
    fn regret_examples() {
        assert_eq!(dynamic_regret(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(dynamic_regret(&[3.0, 3.0], &[1.0, 2.0]).unwrap(), vec![2.0, 3.0]);
        assert!(dynamic_regret(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fit_examples() {
        let f = dynamic_fit(&[vec![1.0], vec![-2.0], vec![3.0]]).unwrap();
        assert_eq!(f[2], 2.0);
        let f = dynamic_fit(&[vec![-1.0, -2.0], vec![-0.5, 0.0]]).unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
        let alt: Vec<Vec<f64>> = (0..6).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
        assert_eq!(dynamic_fit(&alt).unwrap(), vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(dynamic_fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn gap_decomposition() {
        let g = optimality_gap(&[5.0, 5.0], &[5.0, 5.0], &[5.0, 5.0]).unwrap();
        assert_eq!(g.gap, 0.0);
        let g = optimality_gap(&[10.0], &[5.0], &[2.0]).unwrap();
        assert_eq!((g.u1, g.u2, g.gap), (5.0, 3.0, 8.0));
    }

    fn affine_slot(a: &Arc<Matrix<f64>>, b: Vec<f64>) -> SlotProblem<f64> {
        SlotProblem::new(
            SeparableQuadratic::diagonal(vec![1.0, 1.0]).unwrap(),
            Constraint::affine(a.clone(), b).unwrap(),
        )
    }

    #[test]
    fn constraint_variation_shared_matrix() {
        let a = Arc::new(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        let bx = FeasibleBox::uniform(2, 0.0, 1.0).unwrap();
        let v = constraint_variation(&[affine_slot(&a, vec![1.0, 0.0]), affine_slot(&a, vec![2.0, -5.0])], &bx)
            .unwrap();
        assert_eq!(v.per_slot, vec![1.0]);
        let v = constraint_variation(&[affine_slot(&a, vec![1.0, 0.0]), affine_slot(&a, vec![1.0, 0.0])], &bx)
            .unwrap();
        assert_eq!(v.total, 0.0);
        assert!(!v.lower_bound);
    }

    #[test]
    fn constraint_variation_differing_matrices_uses_vertices() {
        let a1 = Arc::new(Matrix::from_rows(&[vec![1.0, 0.0]]));
        let a2 = Arc::new(Matrix::from_rows(&[vec![2.0, -1.0]]));
        let bx = FeasibleBox::uniform(2, 0.0, 1.0).unwrap();
        // difference x − y is largest at (1, 0)
        let v = constraint_variation(&[affine_slot(&a1, vec![0.0]), affine_slot(&a2, vec![0.0])], &bx).unwrap();
        assert_eq!(v.per_slot, vec![1.0]);
    }

    #[test]
    fn minimizer_variation_examples() {
        let d = |v: f64| DecisionVector::new(vec![v]);
        assert_eq!(minimizer_variation(&[d(2.0), d(2.0), d(2.0)]).unwrap(), 0.0);
        assert_eq!(minimizer_variation(&[d(0.0), d(1.0), d(3.0)]).unwrap(), 3.0);
        assert!(minimizer_variation::<f64>(&[]).is_err());
    }

    #[test]
    fn dual_variation_offset_only() {
        let a = Arc::new(Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, -1.0]]));
        let bx = FeasibleBox::uniform(2, 0.0, 10.0).unwrap();
        let p = [affine_slot(&a, vec![1.0, 0.0]), affine_slot(&a, vec![1.5, 0.0])];
        let v = dual_variation(&p, &bx, 4.0, 11, &[]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let same = [p[0].clone(), p[0].clone()];
        assert_eq!(dual_variation(&same, &bx, 4.0, 11, &[]).unwrap(), 0.0);
    }

    #[test]
    fn dual_variation_grid_matches_closed_form_when_structure_differs() {
        // same data but distinct losses force the grid path
        let a = Arc::new(Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, -1.0]]));
        let bx = FeasibleBox::uniform(2, 0.0, 10.0).unwrap();
        let p0 = affine_slot(&a, vec![1.0, 0.0]);
        let p1 = SlotProblem::new(
            SeparableQuadratic::new(vec![1.0, 1.0], vec![0.0, 1e-300]).unwrap(),
            Constraint::affine(a.clone(), vec![1.5, 0.0]).unwrap(),
        );
        let v = dual_variation(&[p0, p1], &bx, 4.0, 11, &[]).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn drift_examples() {
        let mk = |lambda: Vec<f64>, g: Vec<f64>, mu: f64| {
            let l = MultiplierVector::new(lambda).unwrap();
            let next = crate::oco::mosp_dual_step(&l, &g, mu).unwrap();
            RoundTrace {
                t: 1,
                x: DecisionVector::new(vec![0.0]),
                drift: (linalg::norm_sq(&next) - linalg::norm_sq(&l)) / 2.0,
                lambda: l,
                lambda_next: next,
                loss: 0.0,
                constraint: g,
                queue: None,
            }
        };
        let tr = vec![mk(vec![0.0, 0.0], vec![3.0, -1.0], 0.5), mk(vec![1.0, 2.0], vec![0.0, 0.0], 0.5)];
        assert_eq!(drift_check(&tr, 0.5), vec![true, true]);
    }

    #[test]
    fn dual_bound_requires_hypothesis() {
        let c = ProblemConstants { g: 1.0f64, m: 1.0, r: 1.0 };
        let s = StepsizePair::new(0.5, 0.5).unwrap();
        assert!(dual_bound(&c, 0.1, 0.2, &s).is_none());
        let b = dual_bound(&c, 1.0, 0.0, &s).unwrap();
        assert!((b - (0.5 + 2.0 + 1.0 + 0.25)).abs() < 1e-12);
    }
}
