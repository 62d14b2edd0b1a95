//! Primal-dual interior point method for diagonal QPs with linear inequality
//! constraints and box bounds:
//!
//! ```text
//! minimise   ½ zᵀ diag(h) z + qᵀ z
//! subject to C z ≤ e,   lower ≤ z ≤ upper
//! ```
//!
//! Each Newton step reduces to an `m×m` Schur complement system because the
//! Hessian and the bound barriers are diagonal. Mehrotra predictor-corrector
//! steps, followed by an active-set polish once the active set is clear.

use crate::error::{argument, MospError, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;
use crate::types::FeasibleBox;

use super::kkt_residual;

pub struct BoxQp<'a, T> {
    /// Diagonal of the Hessian, `h ≥ 0`.
    pub curvature: &'a [T],
    pub linear: &'a [T],
    pub constraints: &'a Matrix<T>,
    pub rhs: &'a [T],
    pub bounds: &'a FeasibleBox<T>,
}

#[derive(Debug, Clone)]
pub struct QpSolution<T> {
    pub z: Vec<T>,
    /// Multipliers of `C z ≤ e`.
    pub multipliers: Vec<T>,
    pub iterations: usize,
    pub kkt_residual: T,
}

struct Iterate<T> {
    z: Vec<T>,
    y: Vec<T>,
    s: Vec<T>,
    zl: Vec<T>,
    zu: Vec<T>,
}

struct Direction<T> {
    dz: Vec<T>,
    dy: Vec<T>,
    ds: Vec<T>,
    dzl: Vec<T>,
    dzu: Vec<T>,
}

impl<'a, T: Scalar> BoxQp<'a, T> {
    fn validate(&self) -> Result<()> {
        let n = self.bounds.dim();
        if self.curvature.len() != n
            || self.linear.len() != n
            || self.constraints.cols() != n
            || self.constraints.rows() != self.rhs.len()
        {
            return Err(argument("QP data dimensions are inconsistent"));
        }
        if self.curvature.iter().any(|h| *h < T::zero() || !h.is_finite())
            || !linalg::all_finite(self.linear)
            || !linalg::all_finite(self.rhs)
        {
            return Err(argument("QP data must be finite with non-negative curvature"));
        }
        Ok(())
    }

    pub fn objective(&self, z: &[T]) -> T {
        z.iter()
            .zip(self.curvature.iter().zip(self.linear))
            .map(|(&zi, (&h, &q))| T::of(0.5) * h * zi * zi + q * zi)
            .sum()
    }

    fn lagrangian_gradient(&self, z: &[T], y: &[T]) -> Vec<T> {
        let mut g = self.constraints.tr_mul_vec(y);
        for i in 0..g.len() {
            g[i] += self.curvature[i] * z[i] + self.linear[i];
        }
        g
    }

    fn constraint_values(&self, z: &[T]) -> Vec<T> {
        let mut c = self.constraints.mul_vec(z);
        for (ci, &ei) in c.iter_mut().zip(self.rhs) {
            *ci -= ei;
        }
        c
    }

    pub fn kkt(&self, z: &[T], y: &[T]) -> T {
        kkt_residual(
            z,
            &self.lagrangian_gradient(z, y),
            &self.constraint_values(z),
            y,
            self.bounds,
        )
    }
}

/// Solves the QP to the max-norm KKT residual `tol`.
pub fn solve_box_qp<T: Scalar>(
    qp: &BoxQp<'_, T>,
    tol: T,
    max_iterations: usize,
) -> Result<QpSolution<T>> {
    let (sol, converged) = run_ipm(qp, tol, max_iterations)?;
    if converged {
        Ok(sol)
    } else {
        Err(MospError::SolverFailure {
            context: "interior point method did not reach the KKT tolerance".into(),
            residual: sol.kkt_residual.as_f64(),
            iterations: max_iterations,
        })
    }
}

/// Like [`solve_box_qp`] but hands back the best iterate found when the
/// tolerance is missed, flagged by the boolean.
pub(crate) fn run_ipm<T: Scalar>(
    qp: &BoxQp<'_, T>,
    tol: T,
    max_iterations: usize,
) -> Result<(QpSolution<T>, bool)> {
    qp.validate()?;
    let n = qp.bounds.dim();
    let m = qp.rhs.len();
    let lo = qp.bounds.lower();
    let hi = qp.bounds.upper();
    let free: Vec<bool> = (0..n).map(|i| hi[i] > lo[i]).collect();
    let one = T::one();
    let half = T::of(0.5);

    let z: Vec<T> = (0..n).map(|i| lo[i] + half * (hi[i] - lo[i])).collect();
    // duals start at the size of the objective gradient over the box
    let dual0 = (0..n)
        .filter(|&i| free[i])
        .map(|i| qp.linear[i].abs() + qp.curvature[i] * (hi[i] - lo[i]))
        .fold(one, T::max);
    let cz = qp.constraints.mul_vec(&z);
    let s: Vec<T> = (0..m).map(|a| (qp.rhs[a] - cz[a]).max(one)).collect();
    let mut it = Iterate {
        z,
        y: vec![dual0; m],
        s,
        zl: free.iter().map(|&f| if f { dual0 } else { T::zero() }).collect(),
        zu: free.iter().map(|&f| if f { dual0 } else { T::zero() }).collect(),
    };

    let n_comp = free.iter().filter(|&&f| f).count() * 2 + m;
    let mut best: Option<QpSolution<T>> = None;

    for iteration in 1..=max_iterations {
        let gl: Vec<T> = (0..n).map(|i| it.z[i] - lo[i]).collect();
        let gu: Vec<T> = (0..n).map(|i| hi[i] - it.z[i]).collect();
        let mut r_d = qp.lagrangian_gradient(&it.z, &it.y);
        for i in 0..n {
            r_d[i] = if free[i] {
                r_d[i] - it.zl[i] + it.zu[i]
            } else {
                T::zero()
            };
        }
        let mut r_p = qp.constraints.mul_vec(&it.z);
        for a in 0..m {
            r_p[a] += it.s[a] - qp.rhs[a];
        }
        let comp: T = (0..n)
            .filter(|&i| free[i])
            .map(|i| gl[i] * it.zl[i] + gu[i] * it.zu[i])
            .sum::<T>()
            + linalg::dot(&it.s, &it.y);
        let mu = if n_comp > 0 {
            comp / T::of_usize(n_comp)
        } else {
            T::zero()
        };

        let kkt = qp.kkt(&it.z, &it.y);
        if kkt <= tol {
            return Ok((
                QpSolution {
                    z: it.z,
                    multipliers: it.y,
                    iterations: iteration,
                    kkt_residual: kkt,
                },
                true,
            ));
        }
        if iteration > 5 {
            let candidates = [polish(qp, &it, &free, one), polish(qp, &it, &free, T::of(10.0))];
            let p = candidates
                .into_iter()
                .flatten()
                .min_by(|a, b| a.kkt_residual.partial_cmp(&b.kkt_residual).unwrap_or(std::cmp::Ordering::Equal));
            if let Some(p) = p {
                if p.kkt_residual <= tol {
                    return Ok((
                        QpSolution {
                            iterations: iteration,
                            ..p
                        },
                        true,
                    ));
                }
                if best.as_ref().map_or(true, |b| p.kkt_residual < b.kkt_residual) {
                    best = Some(p);
                }
            }
        }
        if n_comp == 0 {
            break;
        }

        let Some(aff) = newton_direction(
            qp,
            &it,
            &free,
            &gl,
            &gu,
            &r_d,
            &r_p,
            |i| -gl[i] * it.zl[i],
            |i| -gu[i] * it.zu[i],
            |a| -it.s[a] * it.y[a],
        ) else {
            break;
        };
        let a_aff = max_step(&it, &free, &gl, &gu, &aff);
        let mu_aff = {
            let mut c = T::zero();
            for i in (0..n).filter(|&i| free[i]) {
                c += (gl[i] + a_aff * aff.dz[i]) * (it.zl[i] + a_aff * aff.dzl[i]);
                c += (gu[i] - a_aff * aff.dz[i]) * (it.zu[i] + a_aff * aff.dzu[i]);
            }
            for a in 0..m {
                c += (it.s[a] + a_aff * aff.ds[a]) * (it.y[a] + a_aff * aff.dy[a]);
            }
            c / T::of_usize(n_comp)
        };
        let sigma = if mu > T::zero() {
            let r = (mu_aff / mu).max(T::zero()).min(one);
            r * r * r
        } else {
            T::zero()
        };
        let target = sigma * mu;

        let Some(dir) = newton_direction(
            qp,
            &it,
            &free,
            &gl,
            &gu,
            &r_d,
            &r_p,
            |i| target - gl[i] * it.zl[i] - aff.dz[i] * aff.dzl[i],
            |i| target - gu[i] * it.zu[i] + aff.dz[i] * aff.dzu[i],
            |a| target - it.s[a] * it.y[a] - aff.ds[a] * aff.dy[a],
        ) else {
            break;
        };
        // the corrector can raise complementarity; keep whichever of it and
        // a plain centring step lowers the merit more
        let residual = linalg::norm_inf(&r_d).max(linalg::norm_inf(&r_p));
        let merit = |d: &Direction<T>| -> (T, T) {
            let a = (max_step(&it, &free, &gl, &gu, d) * T::of(0.995)).min(one);
            let mut c = T::zero();
            for i in (0..n).filter(|&i| free[i]) {
                c += (gl[i] + a * d.dz[i]) * (it.zl[i] + a * d.dzl[i]);
                c += (gu[i] - a * d.dz[i]) * (it.zu[i] + a * d.dzu[i]);
            }
            for k in 0..m {
                c += (it.s[k] + a * d.ds[k]) * (it.y[k] + a * d.dy[k]);
            }
            (a, c / T::of_usize(n_comp) + (one - a) * residual)
        };
        let (mut step, corrected) = merit(&dir);
        let mut dir = dir;
        let centre = half * mu;
        if let Some(c) = newton_direction(
            qp,
            &it,
            &free,
            &gl,
            &gu,
            &r_d,
            &r_p,
            |i| centre - gl[i] * it.zl[i],
            |i| centre - gu[i] * it.zu[i],
            |a| centre - it.s[a] * it.y[a],
        ) {
            let (c_step, c_merit) = merit(&c);
            if c_merit < corrected {
                step = c_step;
                dir = c;
            }
        }
        for i in 0..n {
            if free[i] {
                it.z[i] += step * dir.dz[i];
                it.z[i] = it.z[i].max(lo[i]).min(hi[i]);
                it.zl[i] += step * dir.dzl[i];
                it.zu[i] += step * dir.dzu[i];
            }
        }
        for a in 0..m {
            it.y[a] += step * dir.dy[a];
            it.s[a] += step * dir.ds[a];
        }
        if !linalg::all_finite(&it.z) || !linalg::all_finite(&it.y) {
            break;
        }
    }

    let last_kkt = qp.kkt(&it.z, &it.y);
    let sol = match best {
        Some(b) if b.kkt_residual < last_kkt || !last_kkt.is_finite() => b,
        _ => QpSolution {
            z: it.z,
            multipliers: it.y,
            iterations: max_iterations,
            kkt_residual: last_kkt,
        },
    };
    Ok((sol, false))
}

#[allow(clippy::too_many_arguments)]
fn newton_direction<T: Scalar>(
    qp: &BoxQp<'_, T>,
    it: &Iterate<T>,
    free: &[bool],
    gl: &[T],
    gu: &[T],
    r_d: &[T],
    r_p: &[T],
    kappa_l: impl Fn(usize) -> T,
    kappa_u: impl Fn(usize) -> T,
    kappa_s: impl Fn(usize) -> T,
) -> Option<Direction<T>> {
    let n = free.len();
    let m = r_p.len();
    let c = qp.constraints;

    let mut d_inv = vec![T::zero(); n];
    let mut rho1 = vec![T::zero(); n];
    for i in 0..n {
        if free[i] {
            let d = qp.curvature[i] + it.zl[i] / gl[i] + it.zu[i] / gu[i];
            d_inv[i] = T::one() / d;
            rho1[i] = -r_d[i] + kappa_l(i) / gl[i] - kappa_u(i) / gu[i];
        }
    }
    let rho2: Vec<T> = (0..m).map(|a| -r_p[a] - kappa_s(a) / it.y[a]).collect();

    let mut schur = vec![T::zero(); m * m];
    let mut rhs = vec![T::zero(); m];
    for a in 0..m {
        let ra = c.row(a);
        for b in 0..=a {
            let rb = c.row(b);
            let mut acc = T::zero();
            for i in 0..n {
                acc += ra[i] * rb[i] * d_inv[i];
            }
            schur[a * m + b] = acc;
            schur[b * m + a] = acc;
        }
        schur[a * m + a] += it.s[a] / it.y[a];
        let mut acc = T::zero();
        for i in 0..n {
            acc += ra[i] * d_inv[i] * rho1[i];
        }
        rhs[a] = acc - rho2[a];
    }
    if m > 0 {
        linalg::cholesky(&mut schur, m)?;
        linalg::cholesky_solve(&schur, m, &mut rhs);
    }
    let dy = rhs;
    let ct_dy = c.tr_mul_vec(&dy);
    let mut dz = vec![T::zero(); n];
    let mut dzl = vec![T::zero(); n];
    let mut dzu = vec![T::zero(); n];
    for i in 0..n {
        if free[i] {
            dz[i] = d_inv[i] * (rho1[i] - ct_dy[i]);
            dzl[i] = (kappa_l(i) - it.zl[i] * dz[i]) / gl[i];
            dzu[i] = (kappa_u(i) + it.zu[i] * dz[i]) / gu[i];
        }
    }
    let ds: Vec<T> = (0..m)
        .map(|a| (kappa_s(a) - it.s[a] * dy[a]) / it.y[a])
        .collect();
    let dir = Direction {
        dz,
        dy,
        ds,
        dzl,
        dzu,
    };
    if linalg::all_finite(&dir.dz) && linalg::all_finite(&dir.dy) {
        Some(dir)
    } else {
        None
    }
}

fn max_step<T: Scalar>(
    it: &Iterate<T>,
    free: &[bool],
    gl: &[T],
    gu: &[T],
    d: &Direction<T>,
) -> T {
    let mut step = T::one();
    let mut limit = |v: T, dv: T| {
        if dv < T::zero() {
            step = step.min(-v / dv);
        }
    };
    for i in 0..free.len() {
        if free[i] {
            limit(gl[i], d.dz[i]);
            limit(gu[i], -d.dz[i]);
            limit(it.zl[i], d.dzl[i]);
            limit(it.zu[i], d.dzu[i]);
        }
    }
    for a in 0..it.y.len() {
        limit(it.y[a], d.dy[a]);
        limit(it.s[a], d.ds[a]);
    }
    step
}

/// Solves the equality-constrained QP on the active set guessed from the
/// current iterate: a bound or constraint counts as active when its
/// multiplier exceeds `ratio` times its gap. Returns `None` when the guess is
/// degenerate.
fn polish<T: Scalar>(qp: &BoxQp<'_, T>, it: &Iterate<T>, free: &[bool], ratio: T) -> Option<QpSolution<T>> {
    let n = free.len();
    let lo = qp.bounds.lower();
    let hi = qp.bounds.upper();
    let mut z = it.z.clone();
    let mut inactive = vec![false; n];
    for i in 0..n {
        if !free[i] {
            z[i] = lo[i];
        } else if it.zl[i] > ratio * (z[i] - lo[i]) {
            z[i] = lo[i];
        } else if it.zu[i] > ratio * (hi[i] - z[i]) {
            z[i] = hi[i];
        } else {
            if !(qp.curvature[i] > T::zero()) {
                return None;
            }
            inactive[i] = true;
        }
    }
    let active: Vec<usize> = (0..qp.rhs.len()).filter(|&a| it.y[a] > ratio * it.s[a]).collect();
    let k = active.len();
    let c = qp.constraints;

    let mut y = vec![T::zero(); qp.rhs.len()];
    if k > 0 {
        let mut schur = vec![T::zero(); k * k];
        let mut rhs = vec![T::zero(); k];
        for (ia, &a) in active.iter().enumerate() {
            let ra = c.row(a);
            for (ib, &b) in active.iter().enumerate().take(ia + 1) {
                let rb = c.row(b);
                let mut acc = T::zero();
                for i in (0..n).filter(|&i| inactive[i]) {
                    acc += ra[i] * rb[i] / qp.curvature[i];
                }
                schur[ia * k + ib] = acc;
                schur[ib * k + ia] = acc;
            }
            let mut acc = -qp.rhs[a];
            for i in 0..n {
                if inactive[i] {
                    acc -= ra[i] * qp.linear[i] / qp.curvature[i];
                } else {
                    acc += ra[i] * z[i];
                }
            }
            rhs[ia] = acc;
        }
        linalg::cholesky(&mut schur, k)?;
        linalg::cholesky_solve(&schur, k, &mut rhs);
        for (ia, &a) in active.iter().enumerate() {
            y[a] = rhs[ia].max(T::zero());
        }
    }
    let ct_y = c.tr_mul_vec(&y);
    for i in 0..n {
        if inactive[i] {
            z[i] = (-(qp.linear[i] + ct_y[i]) / qp.curvature[i])
                .max(lo[i])
                .min(hi[i]);
        }
    }
    if !linalg::all_finite(&z) {
        return None;
    }
    let kkt = qp.kkt(&z, &y);
    Some(QpSolution {
        z,
        multipliers: y,
        iterations: 0,
        kkt_residual: kkt,
    })
}
