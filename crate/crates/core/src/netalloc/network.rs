//! Graph, incidence matrix, costs and constraints of the cloud network.
//!
//! Decision ordering is `[x^{11}, …, x^{1K}, x^{21}, …, x^{JK}, y^1, …, y^K]`:
//! link `(j, k)` sits at `j·K + k` and the virtual edge of data center `k`
//! at `J·K + k`. Constraint rows are the `J` mapping nodes followed by the
//! `K` data centers.

use std::sync::Arc;

use crate::error::{argument, Result};
use crate::linalg::Matrix;
use crate::oracle::{Constraint, SeparableQuadratic, SlotProblem};
use crate::scalar::Scalar;
use crate::types::{DecisionVector, FeasibleBox};

/// Node-edge incidence matrix (`(J+K) × (JK+K)`). A link column has −1 at
/// its mapping node and +1 at its data center; a virtual column has −1 at
/// its data center.
pub fn build_incidence<T: Scalar>(j: usize, k: usize) -> Matrix<T> {
    let mut a = Matrix::zeros(j + k, j * k + k);
    for jj in 0..j {
        for kk in 0..k {
            let e = jj * k + kk;
            a.set(jj, e, -T::one());
            a.set(j + kk, e, T::one());
        }
    }
    for kk in 0..k {
        a.set(j + kk, j * k + kk, -T::one());
    }
    a
}

/// Time-varying parameters of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotParams<T> {
    /// `p_t^k`, one per data center.
    pub prices: Vec<T>,
    /// `b_t^j`, one per mapping node.
    pub loads: Vec<T>,
}

impl<T: Scalar> SlotParams<T> {
    /// Constraint offset `[b^1 … b^J, 0 … 0]`.
    pub fn offset(&self, data_centers: usize) -> Vec<T> {
        let mut b = self.loads.clone();
        b.resize(self.loads.len() + data_centers, T::zero());
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudNetwork<T: Scalar> {
    mapping_nodes: usize,
    data_centers: usize,
    link_caps: Vec<T>,
    link_costs: Vec<T>,
    dc_caps: Vec<T>,
    incidence: Arc<Matrix<T>>,
}

impl<T: Scalar> CloudNetwork<T> {
    /// Link tables are indexed `j·K + k`.
    pub fn new(
        mapping_nodes: usize,
        data_centers: usize,
        link_caps: Vec<T>,
        link_costs: Vec<T>,
        dc_caps: Vec<T>,
    ) -> Result<Self> {
        if mapping_nodes == 0 || data_centers == 0 {
            return Err(argument("network needs at least one mapping node and one data center"));
        }
        let links = mapping_nodes * data_centers;
        if link_caps.len() != links || link_costs.len() != links || dc_caps.len() != data_centers {
            return Err(argument("network tables do not match J and K"));
        }
        let positive = |v: &[T]| v.iter().all(|&x| x > T::zero() && x.is_finite());
        if !positive(&link_caps) || !positive(&link_costs) || !positive(&dc_caps) {
            return Err(argument("caps and costs must be positive and finite"));
        }
        Ok(Self {
            mapping_nodes,
            data_centers,
            link_caps,
            link_costs,
            dc_caps,
            incidence: Arc::new(build_incidence(mapping_nodes, data_centers)),
        })
    }

    /// `J`
    pub fn mapping_nodes(&self) -> usize {
        self.mapping_nodes
    }

    /// `K`
    pub fn data_centers(&self) -> usize {
        self.data_centers
    }

    /// `E = JK + K`
    pub fn edges(&self) -> usize {
        self.mapping_nodes * self.data_centers + self.data_centers
    }

    /// `I = J + K`
    pub fn nodes(&self) -> usize {
        self.mapping_nodes + self.data_centers
    }

    pub fn link_index(&self, j: usize, k: usize) -> usize {
        j * self.data_centers + k
    }

    pub fn dc_index(&self, k: usize) -> usize {
        self.mapping_nodes * self.data_centers + k
    }

    pub fn link_caps(&self) -> &[T] {
        &self.link_caps
    }

    pub fn link_costs(&self) -> &[T] {
        &self.link_costs
    }

    pub fn dc_caps(&self) -> &[T] {
        &self.dc_caps
    }

    pub fn incidence(&self) -> &Arc<Matrix<T>> {
        &self.incidence
    }

    /// `[0, x̄] × [0, ȳ]`
    pub fn feasible_box(&self) -> FeasibleBox<T> {
        let mut upper = self.link_caps.clone();
        upper.extend_from_slice(&self.dc_caps);
        FeasibleBox::from_upper(upper).expect("caps validated positive")
    }

    /// `Σ_{jk} c^{jk}(x^{jk})² + Σ_k p^k(y^k)²` as a separable quadratic.
    pub fn cost(&self, prices: &[T]) -> Result<SeparableQuadratic<T>> {
        if prices.len() != self.data_centers {
            return Err(argument("one price per data center expected"));
        }
        let mut w = self.link_costs.clone();
        w.extend_from_slice(prices);
        SeparableQuadratic::diagonal(w)
    }

    pub fn constraint(&self, loads: &[T]) -> Result<Constraint<T>> {
        if loads.len() != self.mapping_nodes {
            return Err(argument("one load per mapping node expected"));
        }
        let params = SlotParams {
            prices: Vec::new(),
            loads: loads.to_vec(),
        };
        Constraint::affine(self.incidence.clone(), params.offset(self.data_centers))
    }

    pub fn slot_problem(&self, params: &SlotParams<T>) -> Result<SlotProblem<T>> {
        Ok(SlotProblem::new(
            self.cost(&params.prices)?,
            self.constraint(&params.loads)?,
        ))
    }
}

fn check_decision<T: Scalar>(x: &[T], net: &CloudNetwork<T>) -> Result<()> {
    if x.len() != net.edges() {
        return Err(argument(format!(
            "decision has length {} but the network has {} edges",
            x.len(),
            net.edges()
        )));
    }
    Ok(())
}

pub fn network_cost<T: Scalar>(x: &[T], prices: &[T], net: &CloudNetwork<T>) -> Result<T> {
    check_decision(x, net)?;
    use crate::oracle::Loss;
    Ok(net.cost(prices)?.value(x))
}

pub fn network_cost_gradient<T: Scalar>(
    x: &[T],
    prices: &[T],
    net: &CloudNetwork<T>,
) -> Result<Vec<T>> {
    check_decision(x, net)?;
    use crate::oracle::Loss;
    Ok(net.cost(prices)?.gradient(x))
}

/// `A x + b` with `b = [loads, 0]`.
pub fn network_constraint<T: Scalar>(x: &[T], loads: &[T], net: &CloudNetwork<T>) -> Result<Vec<T>> {
    check_decision(x, net)?;
    Ok(net.constraint(loads)?.value(x))
}

/// Per-node buffered workload.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState<T>(Vec<T>);

impl<T: Scalar> QueueState<T> {
    pub fn zeros(nodes: usize) -> Self {
        Self(vec![T::zero(); nodes])
    }

    pub fn new(q: Vec<T>) -> Result<Self> {
        if q.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(argument("queue lengths must be finite and non-negative"));
        }
        Ok(Self(q))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// `q_{t+1} = [q_t + A x_t + b_t]⁺`
pub fn queue_update<T: Scalar>(
    q: &QueueState<T>,
    x: &DecisionVector<T>,
    loads: &[T],
    net: &CloudNetwork<T>,
) -> Result<QueueState<T>> {
    let g = network_constraint(x, loads, net)?;
    if g.len() != q.0.len() {
        return Err(argument("queue length differs from the node count"));
    }
    Ok(QueueState(
        q.0.iter()
            .zip(&g)
            .map(|(&qi, &gi)| (qi + gi).max(T::zero()))
            .collect(),
    ))
}
