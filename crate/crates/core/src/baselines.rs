//! Online dual gradient (ODG): the primal minimises the Lagrangian of the
//! previous slot in closed form, the dual ascends on the current slot.

use crate::error::{argument, Result};
use crate::linalg;
use crate::netalloc::{queue_update, CloudNetwork, QueueState, ScenarioStream, SlotParams};
use crate::oco::{mosp_dual_step, RoundTrace};
use crate::oracle::{Loss, SeparableQuadratic};
use crate::scalar::Scalar;
use crate::types::{DecisionVector, MultiplierVector};

#[derive(Debug, Clone, PartialEq)]
pub struct OdgState<T> {
    pub lambda: MultiplierVector<T>,
    pub mu_odg: T,
}

impl<T: Scalar> OdgState<T> {
    pub fn new(nodes: usize, mu_odg: T) -> Result<Self> {
        if !(mu_odg > T::zero()) || !mu_odg.is_finite() {
            return Err(argument("ODG stepsize must be positive and finite"));
        }
        Ok(Self {
            lambda: MultiplierVector::zeros(nodes),
            mu_odg,
        })
    }
}

/// Which slot's prices the primal sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OdgInformation {
    /// Slot `t − 1` (causal).
    #[default]
    Delayed,
    /// Slot `t`; not implementable online, kept for diagnostics.
    Current,
}

/// `argmin_x f(x; θ) + λᵀ(A x + b)` over the box:
/// `x^{jk} = clip((λ^j − λ^k)/(2c^{jk}))`, `y^k = clip(λ^k/(2p^k))`.
pub fn odg_primal<T: Scalar>(
    lambda: &MultiplierVector<T>,
    params: &SlotParams<T>,
    net: &CloudNetwork<T>,
) -> Result<DecisionVector<T>> {
    if lambda.len() != net.nodes() {
        return Err(argument("multiplier length differs from the node count"));
    }
    let (jn, kn) = (net.mapping_nodes(), net.data_centers());
    let mut x = vec![T::zero(); net.edges()];
    for j in 0..jn {
        for k in 0..kn {
            let e = net.link_index(j, k);
            let a = lambda[jn + k] - lambda[j];
            x[e] = SeparableQuadratic::scalar_argmin(net.link_costs()[e], a, T::zero(), net.link_caps()[e]);
        }
    }
    if params.prices.len() != kn {
        return Err(argument("one price per data center expected"));
    }
    for k in 0..kn {
        // a price of 0 leaves a linear term; scalar_argmin picks the bound
        x[net.dc_index(k)] =
            SeparableQuadratic::scalar_argmin(params.prices[k], -lambda[jn + k], T::zero(), net.dc_caps()[k]);
    }
    Ok(DecisionVector::new(x))
}

/// `[λ + μ_ODG (A x_t + b_t)]⁺`
pub fn odg_dual<T: Scalar>(state: &OdgState<T>, g: &[T]) -> Result<MultiplierVector<T>> {
    mosp_dual_step(&state.lambda, g, state.mu_odg)
}

/// Runs ODG over the first `horizon` slots, starting from `λ_1 = 0` (hence
/// `x_1 = 0`).
pub fn run_odg<T: Scalar>(
    stream: &ScenarioStream<T>,
    net: &CloudNetwork<T>,
    mu_odg: T,
    horizon: usize,
    info: OdgInformation,
) -> Result<Vec<RoundTrace<T>>> {
    if horizon == 0 || horizon > stream.horizon() {
        return Err(argument("horizon outside the stream"));
    }
    let mut state = OdgState::new(net.nodes(), mu_odg)?;
    let mut q = QueueState::zeros(net.nodes());
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let now = stream.slot(t);
        let x = match info {
            OdgInformation::Current => odg_primal(&state.lambda, now, net)?,
            OdgInformation::Delayed if t == 1 => DecisionVector::zeros(net.edges()),
            OdgInformation::Delayed => odg_primal(&state.lambda, stream.slot(t - 1), net)?,
        };
        let g = net.constraint(&now.loads)?.value(&x);
        let lambda_next = odg_dual(&state, &g)?;
        q = queue_update(&q, &x, &now.loads, net)?;
        let drift = (linalg::norm_sq(&lambda_next) - linalg::norm_sq(&state.lambda)) / T::of(2.0);
        out.push(RoundTrace {
            t,
            loss: net.cost(&now.prices)?.value(&x),
            x,
            lambda: state.lambda.clone(),
            lambda_next: lambda_next.clone(),
            constraint: g,
            drift,
            queue: Some(q.as_slice().to_vec()),
        });
        state.lambda = lambda_next;
    }
    Ok(out)
}
