//! Centralized learner runs on a network instance, with queue tracking.

use crate::error::{argument, Result};
use crate::oco::{MospLearner, RoundTrace};
use crate::oracle::SlotProblem;
use crate::scalar::Scalar;
use crate::types::StepsizePair;

use super::network::{queue_update, CloudNetwork, QueueState};
use super::scenario::ScenarioStream;

/// Slot problems `(f_t, g_t)` for the first `horizon` slots of the stream.
pub fn network_problems<T: Scalar>(
    net: &CloudNetwork<T>,
    stream: &ScenarioStream<T>,
    horizon: usize,
) -> Result<Vec<SlotProblem<T>>> {
    if horizon == 0 || horizon > stream.horizon() {
        return Err(argument(format!(
            "horizon {horizon} outside the stream's 1..={}",
            stream.horizon()
        )));
    }
    stream.slots[..horizon].iter().map(|p| net.slot_problem(p)).collect()
}

/// Runs the learner from `x_1 = 0`, attaching `q_{t+1}` to every record.
pub fn run_network_mosp<T: Scalar>(
    net: &CloudNetwork<T>,
    stream: &ScenarioStream<T>,
    horizon: usize,
    steps: StepsizePair<T>,
    restart: Option<usize>,
) -> Result<Vec<RoundTrace<T>>> {
    let problems = network_problems(net, stream, horizon)?;
    let bx = net.feasible_box();
    let mut learner = MospLearner::new(bx.clone(), steps, bx.lower_corner(), net.nodes())?;
    if let Some(delta) = restart {
        learner = learner.with_restart(delta)?;
    }
    let mut q = QueueState::zeros(net.nodes());
    let mut out = Vec::with_capacity(horizon);
    for (p, slot) in problems.iter().zip(&stream.slots) {
        let x = learner.decide()?;
        let mut r = learner.observe(p)?;
        q = queue_update(&q, &x, &slot.loads, net)?;
        r.queue = Some(q.as_slice().to_vec());
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netalloc::network::SlotParams;
    use crate::netalloc::scenario::CaseTag;

    #[test]
    fn queue_scales_to_multiplier_without_clamping() {
        // demand above what the small primal step routes keeps the mapping dual positive
        let net = CloudNetwork::new(1, 1, vec![10.0], vec![1.0], vec![10.0]).unwrap();
        let stream = ScenarioStream {
            mapping_nodes: 1,
            data_centers: 1,
            seed: 0,
            case: CaseTag::Custom,
            slots: vec![
                SlotParams {
                    prices: vec![1.0],
                    loads: vec![5.0]
                };
                20
            ],
        };
        let mu = 0.3f64;
        let trace = run_network_mosp(&net, &stream, 20, StepsizePair::new(0.01, mu).unwrap(), None).unwrap();
        assert!(trace[1..].iter().all(|r| r.lambda[0] > 0.0));
        for r in &trace {
            let q = r.queue.as_ref().unwrap();
            for (qi, li) in q.iter().zip(r.lambda_next.iter()) {
                assert!((mu * qi - li).abs() < 1e-9);
            }
        }
    }
}
