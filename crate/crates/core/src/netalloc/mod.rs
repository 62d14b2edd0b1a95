//! Cloud network workload allocation: `J` mapping nodes route workload to
//! `K` data centers over capacity-limited links.

pub mod distributed;
pub mod io;
pub mod network;
pub mod scenario;
pub mod sim;
pub mod slater;

pub use distributed::{run_distributed, DistributedMosp, DistributedRound, NodeId, NodeMessage};
pub use io::{read_network, read_scenario, write_network, write_scenario};
pub use network::{
    build_incidence, network_constraint, network_cost, network_cost_gradient, queue_update,
    CloudNetwork, QueueState, SlotParams,
};
pub use scenario::{gen_case, gen_case1, gen_case2, gen_network, CaseTag, ScenarioStream};
pub use sim::{network_problems, run_network_mosp};
pub use slater::{generate_instance, slater_margin, NetworkInstance, SlaterMargin};
