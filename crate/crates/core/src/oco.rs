//! The online saddle-point learner: primal prox step on the linearised loss
//! with the exact constraint penalty, followed by projected dual ascent.

use crate::error::{argument, MospError, Result};
use crate::linalg;
use crate::oracle::{Constraint, SlotProblem};
use crate::scalar::Scalar;
use crate::solvers::{solve_prox_general, ProxSettings};
use crate::types::{DecisionVector, FeasibleBox, MultiplierVector, StepsizePair};

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace<T> {
    pub t: usize,
    pub x: DecisionVector<T>,
    /// `λ_t`, the multiplier in force when `x_t` was chosen.
    pub lambda: MultiplierVector<T>,
    /// `λ_{t+1}` after observing `g_t(x_t)`.
    pub lambda_next: MultiplierVector<T>,
    pub loss: T,
    pub constraint: Vec<T>,
    /// `(‖λ_{t+1}‖² − ‖λ_t‖²) / 2`
    pub drift: T,
    /// Buffered workload `q_{t+1}` for network runs.
    pub queue: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
pub struct LearnerState<T> {
    pub x_prev: DecisionVector<T>,
    pub lambda: MultiplierVector<T>,
    /// Slot about to be played, starting at 1.
    pub t: usize,
    pub steps: StepsizePair<T>,
    pub restart_period: Option<usize>,
}

/// `α = μ = scale · T^((β−1)/2)`.
pub fn stepsize_for_horizon<T: Scalar>(horizon: usize, beta: T, scale: T) -> Result<StepsizePair<T>> {
    let s = horizon_scaling(horizon, beta)? * scale;
    StepsizePair::new(s, s)
}

/// Separate primal and dual scales on the same horizon schedule.
pub fn horizon_stepsizes<T: Scalar>(
    horizon: usize,
    beta: T,
    alpha_scale: T,
    mu_scale: T,
) -> Result<StepsizePair<T>> {
    let s = horizon_scaling(horizon, beta)?;
    StepsizePair::new(alpha_scale * s, mu_scale * s)
}

fn horizon_scaling<T: Scalar>(horizon: usize, beta: T) -> Result<T> {
    if horizon == 0 {
        return Err(argument("horizon must be at least 1"));
    }
    if !(beta >= T::zero() && beta < T::one()) {
        return Err(argument(format!("beta must lie in [0, 1), got {beta}")));
    }
    Ok(T::of_usize(horizon).powf((beta - T::one()) / T::of(2.0)))
}

/// Slots at which the multiplier is reset: `1, Δ+1, 2Δ+1, …` up to `T`.
pub fn restart_schedule(horizon: usize, delta: usize) -> Result<Vec<usize>> {
    if delta == 0 {
        return Err(argument("restart period must be positive"));
    }
    if delta > horizon {
        return Err(argument(format!(
            "restart period {delta} exceeds the horizon {horizon}"
        )));
    }
    Ok((1..=horizon).step_by(delta).collect())
}

/// `argmin_{x∈X} ∇f_{t−1}(x_prev)ᵀ(x − x_prev) + λ_tᵀ g_{t−1}(x) + ‖x − x_prev‖²/(2α)`.
///
/// Affine constraints take the closed form `P_X(x_prev − α∇f − αAᵀλ)`.
pub fn mosp_primal_step<T: Scalar>(
    state: &LearnerState<T>,
    prev: &SlotProblem<T>,
    bx: &FeasibleBox<T>,
    prox: &ProxSettings<T>,
) -> Result<DecisionVector<T>> {
    bx.check_dim(&state.x_prev, "previous iterate")?;
    if prev.constraint.dim_out() != state.lambda.len() {
        return Err(argument("multiplier length differs from the constraint"));
    }
    let grad = prev.checked_gradient(&state.x_prev)?;
    let alpha = state.steps.alpha();
    match &prev.constraint {
        Constraint::Affine { matrix, .. } => {
            let at_lambda = matrix.tr_mul_vec(&state.lambda);
            let step: Vec<T> = (0..grad.len())
                .map(|i| state.x_prev[i] - alpha * grad[i] - alpha * at_lambda[i])
                .collect();
            Ok(DecisionVector::new(bx.project(&step)))
        }
        Constraint::General(_) => solve_prox_general(
            &grad,
            &prev.constraint,
            &state.lambda,
            &state.x_prev,
            alpha,
            bx,
            prox,
        ),
    }
}

/// `[λ + μ g]⁺`
pub fn mosp_dual_step<T: Scalar>(
    lambda: &MultiplierVector<T>,
    g: &[T],
    mu: T,
) -> Result<MultiplierVector<T>> {
    if g.len() != lambda.len() {
        return Err(argument("constraint value length differs from the multiplier"));
    }
    if !linalg::all_finite(g) {
        return Err(MospError::OracleFailure("non-finite constraint value".into()));
    }
    let v: Vec<T> = lambda.iter().zip(g).map(|(&l, &gi)| l + mu * gi).collect();
    Ok(MultiplierVector::from_positive_part(&v))
}

/// Stateful learner for use inside a simulation loop: call [`decide`] before
/// the slot's problem is revealed and [`observe`] once it is.
///
/// [`decide`]: MospLearner::decide
/// [`observe`]: MospLearner::observe
pub struct MospLearner<T: Scalar> {
    state: LearnerState<T>,
    bx: FeasibleBox<T>,
    prev: Option<SlotProblem<T>>,
    pending: Option<(DecisionVector<T>, MultiplierVector<T>)>,
    prox: ProxSettings<T>,
}

impl<T: Scalar> MospLearner<T> {
    pub fn new(
        bx: FeasibleBox<T>,
        steps: StepsizePair<T>,
        x0: DecisionVector<T>,
        constraint_dim: usize,
    ) -> Result<Self> {
        bx.check_dim(&x0, "initial iterate")?;
        if !bx.contains(&x0) {
            return Err(argument("initial iterate lies outside the box"));
        }
        Ok(Self {
            state: LearnerState {
                x_prev: x0,
                lambda: MultiplierVector::zeros(constraint_dim),
                t: 1,
                steps,
                restart_period: None,
            },
            bx,
            prev: None,
            pending: None,
            prox: ProxSettings::default(),
        })
    }

    pub fn with_restart(mut self, delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(argument("restart period must be positive"));
        }
        self.state.restart_period = Some(delta);
        Ok(self)
    }

    pub fn with_prox_settings(mut self, prox: ProxSettings<T>) -> Self {
        self.prox = prox;
        self
    }

    pub fn state(&self) -> &LearnerState<T> {
        &self.state
    }

    /// Chooses `x_t` from past information only.
    pub fn decide(&mut self) -> Result<DecisionVector<T>> {
        if let Some(delta) = self.state.restart_period {
            if self.state.t > 1 && (self.state.t - 1) % delta == 0 {
                self.state.lambda = MultiplierVector::zeros(self.state.lambda.len());
            }
        }
        let x = match &self.prev {
            None => self.state.x_prev.clone(),
            Some(prev) => mosp_primal_step(&self.state, prev, &self.bx, &self.prox)?,
        };
        self.pending = Some((x.clone(), self.state.lambda.clone()));
        Ok(x)
    }

    /// Reveals `(f_t, g_t)`, updates the multiplier and returns the slot record.
    pub fn observe(&mut self, problem: &SlotProblem<T>) -> Result<RoundTrace<T>> {
        let Some((x, lambda)) = self.pending.take() else {
            return Err(argument("observe called without a preceding decide"));
        };
        let loss = problem.checked_value(&x)?;
        let g = problem.constraint.checked_value(&x)?;
        let lambda_next = mosp_dual_step(&lambda, &g, self.state.steps.mu())?;
        let drift = (linalg::norm_sq(&lambda_next) - linalg::norm_sq(&lambda)) / T::of(2.0);
        let trace = RoundTrace {
            t: self.state.t,
            x: x.clone(),
            lambda,
            lambda_next: lambda_next.clone(),
            loss,
            constraint: g,
            drift,
            queue: None,
        };
        self.state.x_prev = x;
        self.state.lambda = lambda_next;
        self.state.t += 1;
        self.prev = Some(problem.clone());
        Ok(trace)
    }
}

/// Plays the learner against a fixed problem sequence, optionally resetting
/// the multiplier every `restart` slots.
pub fn run_mosp<T: Scalar>(
    problems: &[SlotProblem<T>],
    bx: &FeasibleBox<T>,
    steps: StepsizePair<T>,
    x0: DecisionVector<T>,
    restart: Option<usize>,
) -> Result<Vec<RoundTrace<T>>> {
    let Some(first) = problems.first() else {
        return Err(argument("problem sequence is empty"));
    };
    let mut learner = MospLearner::new(bx.clone(), steps, x0, first.constraint.dim_out())?;
    if let Some(delta) = restart {
        restart_schedule(problems.len(), delta)?;
        learner = learner.with_restart(delta)?;
    }
    let mut out = Vec::with_capacity(problems.len());
    for p in problems {
        learner.decide()?;
        out.push(learner.observe(p)?);
    }
    Ok(out)
}
