//! Message-passing form of the learner on the cloud network.
//!
//! Mapping node `j` owns `x^{j·}` and `λ^j`; data center `k` owns `y^k` and
//! `λ^k`. After each dual update every node sends its multiplier to its
//! one-hop neighbours and the round closes with a barrier. Workload routed on
//! link `(j, k)` physically arrives at data center `k`, so the data center
//! measures its inflow directly instead of receiving it in a message.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{argument, MospError, Result};
use crate::scalar::Scalar;
use crate::types::{DecisionVector, MultiplierVector, StepsizePair};

use super::network::{CloudNetwork, SlotParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Mapping(usize),
    DataCenter(usize),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Mapping(j) => write!(f, "mapping node {}", j + 1),
            NodeId::DataCenter(k) => write!(f, "data center {}", k + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMessage<T> {
    pub sender: NodeId,
    pub multiplier: T,
    /// Slot whose multiplier `λ_slot` this carries.
    pub slot: usize,
}

#[derive(Debug, Clone)]
struct MappingNode<T> {
    lambda: T,
    flows: Vec<T>,
    /// `λ^k` of each neighbouring data center.
    neighbours: Vec<T>,
}

#[derive(Debug, Clone)]
struct DataCenterNode<T> {
    lambda: T,
    served: T,
    last_price: Option<T>,
    /// `λ^j` of each neighbouring mapping node.
    neighbours: Vec<T>,
}

/// Result of one synchronous round.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedRound<T> {
    pub t: usize,
    /// Global decision assembled from the nodes' local variables.
    pub x: DecisionVector<T>,
    /// `λ_t` (before the round's dual update).
    pub lambda: MultiplierVector<T>,
    /// `λ_{t+1}`
    pub lambda_next: MultiplierVector<T>,
}

pub struct DistributedMosp<T: Scalar> {
    net: CloudNetwork<T>,
    steps: StepsizePair<T>,
    mapping: Vec<MappingNode<T>>,
    centers: Vec<DataCenterNode<T>>,
    mailbox: BTreeMap<NodeId, Vec<NodeMessage<T>>>,
    t: usize,
    restart: Option<usize>,
}

impl<T: Scalar> DistributedMosp<T> {
    /// Starts every node at `x = 0`, `λ = 0`.
    pub fn new(net: CloudNetwork<T>, steps: StepsizePair<T>) -> Self {
        let (j, k) = (net.mapping_nodes(), net.data_centers());
        Self {
            mapping: (0..j)
                .map(|_| MappingNode {
                    lambda: T::zero(),
                    flows: vec![T::zero(); k],
                    neighbours: vec![T::zero(); k],
                })
                .collect(),
            centers: (0..k)
                .map(|_| DataCenterNode {
                    lambda: T::zero(),
                    served: T::zero(),
                    last_price: None,
                    neighbours: vec![T::zero(); j],
                })
                .collect(),
            net,
            steps,
            mailbox: BTreeMap::new(),
            t: 1,
            restart: None,
        }
    }

    /// Every node zeroes its own and its neighbours' multipliers at slots
    /// `Δ+1, 2Δ+1, …`.
    pub fn with_restart(mut self, delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(argument("restart period must be positive"));
        }
        self.restart = Some(delta);
        Ok(self)
    }

    pub fn slot(&self) -> usize {
        self.t
    }

    pub fn multipliers(&self) -> MultiplierVector<T> {
        MultiplierVector::from_positive_part(
            &self
                .mapping
                .iter()
                .map(|n| n.lambda)
                .chain(self.centers.iter().map(|n| n.lambda))
                .collect::<Vec<_>>(),
        )
    }

    pub fn round(&mut self, params: &SlotParams<T>) -> Result<DistributedRound<T>> {
        self.round_dropping(params, None)
    }

    /// Runs a round in which the message from `drop.0` to `drop.1` is lost.
    pub fn round_dropping(
        &mut self,
        params: &SlotParams<T>,
        drop: Option<(NodeId, NodeId)>,
    ) -> Result<DistributedRound<T>> {
        let (jn, kn) = (self.net.mapping_nodes(), self.net.data_centers());
        if params.prices.len() != kn || params.loads.len() != jn {
            return Err(argument("slot parameters do not match the network"));
        }
        let alpha = self.steps.alpha();
        let mu = self.steps.mu();
        let two = T::of(2.0);
        if let Some(delta) = self.restart {
            if self.t > 1 && (self.t - 1) % delta == 0 {
                for n in &mut self.mapping {
                    n.lambda = T::zero();
                    n.neighbours.iter_mut().for_each(|l| *l = T::zero());
                }
                for n in &mut self.centers {
                    n.lambda = T::zero();
                    n.neighbours.iter_mut().for_each(|l| *l = T::zero());
                }
            }
        }
        let lambda: Vec<T> = self
            .mapping
            .iter()
            .map(|n| n.lambda)
            .chain(self.centers.iter().map(|n| n.lambda))
            .collect();

        // primal: local prox steps on last slot's cost, skipped in slot 1
        if self.t > 1 {
            for (j, node) in self.mapping.iter_mut().enumerate() {
                for k in 0..kn {
                    let e = self.net.link_index(j, k);
                    let c = self.net.link_costs()[e];
                    let x = node.flows[k];
                    let v = x - alpha * (two * c * x) - alpha * (node.neighbours[k] - node.lambda);
                    node.flows[k] = v.max(T::zero()).min(self.net.link_caps()[e]);
                }
            }
            for (k, node) in self.centers.iter_mut().enumerate() {
                let p = node.last_price.expect("set after slot 1");
                let y = node.served;
                let v = y - alpha * (two * p * y) - alpha * (-node.lambda);
                node.served = v.max(T::zero()).min(self.net.dc_caps()[k]);
            }
        }

        // physical layer: inflow to each data center
        let inflow: Vec<T> = (0..kn)
            .map(|k| self.mapping.iter().map(|n| n.flows[k]).sum())
            .collect();

        // dual: local constraint values of slot t
        for (j, node) in self.mapping.iter_mut().enumerate() {
            let out: T = node.flows.iter().copied().sum();
            node.lambda = (node.lambda + mu * (params.loads[j] - out)).max(T::zero());
        }
        for (k, node) in self.centers.iter_mut().enumerate() {
            node.lambda = (node.lambda + mu * (inflow[k] - node.served)).max(T::zero());
            node.last_price = Some(params.prices[k]);
        }

        // exchange λ_{t+1} with one-hop neighbours
        let next = self.t + 1;
        for j in 0..jn {
            for k in 0..kn {
                self.send(NodeId::Mapping(j), NodeId::DataCenter(k), self.mapping[j].lambda, next, drop);
                self.send(NodeId::DataCenter(k), NodeId::Mapping(j), self.centers[k].lambda, next, drop);
            }
        }
        self.barrier(next)?;

        let mut x = Vec::with_capacity(self.net.edges());
        for node in &self.mapping {
            x.extend_from_slice(&node.flows);
        }
        x.extend(self.centers.iter().map(|n| n.served));
        let round = DistributedRound {
            t: self.t,
            x: DecisionVector::new(x),
            lambda: MultiplierVector::from_positive_part(&lambda),
            lambda_next: self.multipliers(),
        };
        self.t = next;
        Ok(round)
    }

    fn send(&mut self, from: NodeId, to: NodeId, multiplier: T, slot: usize, drop: Option<(NodeId, NodeId)>) {
        if drop == Some((from, to)) {
            return;
        }
        self.mailbox.entry(to).or_default().push(NodeMessage {
            sender: from,
            multiplier,
            slot,
        });
    }

    /// Drains every inbox; each node must hold one message per neighbour.
    fn barrier(&mut self, slot: usize) -> Result<()> {
        let (jn, kn) = (self.net.mapping_nodes(), self.net.data_centers());
        let mut mailbox = std::mem::take(&mut self.mailbox);
        for j in 0..jn {
            let me = NodeId::Mapping(j);
            let inbox = mailbox.remove(&me).unwrap_or_default();
            for k in 0..kn {
                let sender = NodeId::DataCenter(k);
                let msg = find(&inbox, sender, slot).ok_or_else(|| missing(me, sender, slot))?;
                self.mapping[j].neighbours[k] = msg.multiplier;
            }
        }
        for k in 0..kn {
            let me = NodeId::DataCenter(k);
            let inbox = mailbox.remove(&me).unwrap_or_default();
            for j in 0..jn {
                let sender = NodeId::Mapping(j);
                let msg = find(&inbox, sender, slot).ok_or_else(|| missing(me, sender, slot))?;
                self.centers[k].neighbours[j] = msg.multiplier;
            }
        }
        Ok(())
    }
}

fn find<T: Copy>(inbox: &[NodeMessage<T>], sender: NodeId, slot: usize) -> Option<NodeMessage<T>> {
    inbox
        .iter()
        .find(|m| m.sender == sender && m.slot == slot)
        .copied()
}

fn missing(receiver: NodeId, sender: NodeId, slot: usize) -> MospError {
    MospError::Protocol {
        receiver: receiver.to_string(),
        sender: sender.to_string(),
        slot,
    }
}

/// Runs the protocol over a stream of slot parameters.
pub fn run_distributed<T: Scalar>(
    net: &CloudNetwork<T>,
    slots: &[SlotParams<T>],
    steps: StepsizePair<T>,
    restart: Option<usize>,
) -> Result<Vec<DistributedRound<T>>> {
    let mut d = DistributedMosp::new(net.clone(), steps);
    if let Some(delta) = restart {
        d = d.with_restart(delta)?;
    }
    slots.iter().map(|p| d.round(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oco::run_mosp;

    fn tiny() -> (CloudNetwork<f64>, Vec<SlotParams<f64>>) {
        let net = CloudNetwork::new(1, 1, vec![10.0], vec![0.4], vec![10.0]).unwrap();
        let slots = (0..5)
            .map(|t| SlotParams {
                prices: vec![1.0 + 0.3 * t as f64],
                loads: vec![2.0 + t as f64],
            })
            .collect();
        (net, slots)
    }

    #[test]
    fn matches_centralized_on_tiny_network() {
        let (net, slots) = tiny();
        let steps = StepsizePair::new(0.1, 0.7).unwrap();
        let problems: Vec<_> = slots.iter().map(|p| net.slot_problem(p).unwrap()).collect();
        let bx = net.feasible_box();
        for restart in [None, Some(2)] {
            let dist = run_distributed(&net, &slots, steps, restart).unwrap();
            let cen = run_mosp(&problems, &bx, steps, bx.lower_corner(), restart).unwrap();
            for (d, c) in dist.iter().zip(&cen) {
                assert!(crate::linalg::distance(&d.x, &c.x) < 1e-12);
                assert!(crate::linalg::distance(&d.lambda, &c.lambda) < 1e-12);
                assert!(crate::linalg::distance(&d.lambda_next, &c.lambda_next) < 1e-12);
            }
        }
    }

    #[test]
    fn dropped_message_is_a_protocol_error() {
        let (net, slots) = tiny();
        let mut d = DistributedMosp::new(net, StepsizePair::new(0.1, 0.7).unwrap());
        d.round(&slots[0]).unwrap();
        let err = d
            .round_dropping(&slots[1], Some((NodeId::DataCenter(0), NodeId::Mapping(0))))
            .unwrap_err();
        assert_eq!(
            err,
            MospError::Protocol {
                receiver: "mapping node 1".into(),
                sender: "data center 1".into(),
                slot: 3,
            }
        );
    }

    #[test]
    fn zero_state_is_a_fixed_point_of_the_primal() {
        let (net, _) = tiny();
        let mut d = DistributedMosp::new(net, StepsizePair::new(0.1, 0.7).unwrap());
        let zero = SlotParams {
            prices: vec![1.0],
            loads: vec![0.0],
        };
        for _ in 0..3 {
            let r = d.round(&zero).unwrap();
            assert_eq!(r.x.as_slice(), &[0.0, 0.0]);
            assert_eq!(r.lambda_next.as_slice(), &[0.0, 0.0]);
        }
    }
}
