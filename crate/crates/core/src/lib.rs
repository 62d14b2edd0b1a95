//! Online convex optimisation with long-term, time-varying constraints.
//!
//! The learner ([`oco::MospLearner`], [`oco::run_mosp`]) takes a prox step on
//! the linearised previous loss with the exact previous constraint as a
//! penalty, then a projected dual ascent step. [`netalloc`] builds the cloud
//! network workload allocation model on top of it and [`baselines`] holds the
//! online dual gradient comparison method.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod netalloc;
pub mod oco;
pub mod oracle;
pub mod scalar;
pub mod solvers;
pub mod types;

pub use baselines::{odg_dual, odg_primal, run_odg, OdgInformation, OdgState};
pub use error::{MospError, Result};
pub use oco::{
    horizon_stepsizes, mosp_dual_step, mosp_primal_step, restart_schedule, run_mosp,
    stepsize_for_horizon, LearnerState, MospLearner, RoundTrace,
};
pub use netalloc::{CaseTag, CloudNetwork, NetworkInstance, QueueState, ScenarioStream, SlotParams};
pub use oracle::{Constraint, ConvexConstraint, FnConstraint, FnLoss, Loss, SeparableQuadratic, SlotProblem};
pub use scalar::Scalar;
pub use types::{DecisionVector, FeasibleBox, MultiplierVector, StepsizePair};

pub type Decision = DecisionVector<f64>;
pub type Multipliers = MultiplierVector<f64>;
pub type Box64 = FeasibleBox<f64>;
pub type Steps = StepsizePair<f64>;
pub type Problem = SlotProblem<f64>;
pub type Trace = RoundTrace<f64>;
pub type Learner = MospLearner<f64>;
pub type Network = CloudNetwork<f64>;
pub type Scenario = ScenarioStream<f64>;
