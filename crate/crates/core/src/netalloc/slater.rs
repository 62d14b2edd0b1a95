//! Slater margin of a network instance and the scenario validity guard.

use crate::error::{MospError, Result};
use crate::scalar::Scalar;
use crate::solvers::uniform_slack;
use crate::types::DecisionVector;

use super::network::CloudNetwork;
use super::scenario::{gen_case, gen_network, CaseTag, ScenarioStream};

#[derive(Debug, Clone, PartialEq)]
pub struct SlaterMargin<T> {
    /// Largest `δ ≥ 0` with `A x̃ + b_t ≤ −δ·1` for all slots; 0 when no strict
    /// interior point exists.
    pub epsilon: T,
    pub witness: DecisionVector<T>,
}

/// Maximises the uniform slack `min_i −[A x̃ + b_max]_i` over the box, where
/// `b_max` is the componentwise maximum of the loads over the first
/// `horizon` slots.
pub fn slater_margin<T: Scalar>(
    net: &CloudNetwork<T>,
    stream: &ScenarioStream<T>,
    horizon: usize,
) -> Result<SlaterMargin<T>> {
    let s = stream.truncated(horizon);
    let mut b_max = s.max_loads();
    b_max.resize(net.nodes(), T::zero());
    let e: Vec<T> = b_max.iter().map(|&b| -b).collect();
    let (margin, witness) = uniform_slack(net.incidence(), &e, &net.feasible_box())?;
    Ok(SlaterMargin {
        epsilon: margin.max(T::zero()),
        witness,
    })
}

/// A generated network and stream that passed the Slater guard.
#[derive(Debug, Clone)]
pub struct NetworkInstance<T: Scalar> {
    pub network: CloudNetwork<T>,
    pub stream: ScenarioStream<T>,
    pub slater: SlaterMargin<T>,
    /// The seed actually used after any re-seeding.
    pub effective_seed: u64,
    pub attempts: usize,
}

const RESEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Draws a network and stream from `seed`, re-seeding with
/// `seed + attempt·0x9E3779B97F4A7C15` (wrapping) while the Slater margin is 0.
pub fn generate_instance<T: Scalar>(
    case: CaseTag,
    j: usize,
    k: usize,
    horizon: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<NetworkInstance<T>> {
    for attempt in 0..max_attempts.max(1) {
        let effective_seed = seed.wrapping_add((attempt as u64).wrapping_mul(RESEED_STRIDE));
        let network = gen_network(j, k, effective_seed)?;
        let stream = gen_case(case, j, k, horizon, effective_seed)?;
        let slater = slater_margin(&network, &stream, horizon)?;
        if slater.epsilon > T::zero() {
            return Ok(NetworkInstance {
                network,
                stream,
                slater,
                effective_seed,
                attempts: attempt + 1,
            });
        }
    }
    Err(MospError::Infeasible { margin: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netalloc::network::SlotParams;

    fn tiny_stream(loads: &[f64]) -> ScenarioStream<f64> {
        ScenarioStream {
            mapping_nodes: 1,
            data_centers: 1,
            seed: 0,
            case: CaseTag::Custom,
            slots: loads
                .iter()
                .map(|&b| SlotParams {
                    prices: vec![1.0],
                    loads: vec![b],
                })
                .collect(),
        }
    }

    /// Grid search of `max_{x,y} min(x − b, y − x)` at 0.01 spacing on [0,10]².
    fn grid_margin(b: f64) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (x, y) = (i as f64 * 0.01, j as f64 * 0.01);
                let v = (x - b).min(y - x);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        best
    }

    #[test]
    fn tiny_margin_matches_grid() {
        let net = CloudNetwork::new(1, 1, vec![10.0], vec![1.0], vec![10.0]).unwrap();
        let s = slater_margin(&net, &tiny_stream(&[0.5, 1.0, 0.2]), 3).unwrap();
        let (v, x, y) = grid_margin(1.0);
        assert!((s.epsilon - v).abs() < 1e-2);
        assert!((s.witness[0] - x).abs() < 2e-2 && (s.witness[1] - y).abs() < 2e-2);
        assert!((s.epsilon - 4.5).abs() < 1e-6);

        let s = slater_margin(&net, &tiny_stream(&[0.0]), 1).unwrap();
        assert!((s.epsilon - grid_margin(0.0).0).abs() < 1e-2);
        assert!((s.epsilon - 5.0).abs() < 1e-6);
    }

    #[test]
    fn demand_above_capacity_has_zero_margin() {
        let net = CloudNetwork::new(1, 1, vec![10.0], vec![1.0], vec![10.0]).unwrap();
        let s = slater_margin(&net, &tiny_stream(&[3.0, 25.0]), 2).unwrap();
        assert_eq!(s.epsilon, 0.0);
    }

    #[test]
    fn generated_instances_have_positive_margin() {
        let inst = generate_instance::<f64>(CaseTag::Case1, 10, 10, 100, 1, 64).unwrap();
        assert!(inst.slater.epsilon > 0.0);
        let again = generate_instance::<f64>(CaseTag::Case1, 10, 10, 100, 1, 64).unwrap();
        assert_eq!(inst.effective_seed, again.effective_seed);
    }
}
