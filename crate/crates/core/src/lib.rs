//! Simulation and explanation engine for mixed-motive multi-agent games.
//!
//! The crate is game-agnostic: games implement [`Environment`], seats are
//! filled with [`Policy`] objects and states are scored by a
//! [`ValueFunction`]. On top of the constrained rollout engine
//! ([`Simulator`]) it provides utility explanations of pinned actions,
//! correlation-based relation matrices, probable actions and trajectories,
//! and counterfactual action search from partial queries.
//!
//! Rollouts run on a rayon pool when the `parallel` feature is enabled
//! (default); results are identical for every worker count because each
//! simulation index draws from its own seeded stream.

pub mod counterfactual;
pub mod env;
pub mod error;
pub mod explain;
pub mod parallel;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod utility;
pub mod wire;

#[cfg(test)]
pub(crate) mod testing;

pub use env::{
    ActionSet, AgentId, Environment, FixedPolicy, GameAction, Policy, SubOrder, UniformPolicy, ValueFunction,
    ZeroValue,
};
pub use error::{Error, Result};
pub use parallel::Parallelism;
pub use rng::{SeededRng, SimRng};
pub use simulate::{PinnedAction, PinnedActionSet, Simulator, TraceRecord};
pub use stats::{zscore_standardize, BaselineMoments, RelationMatrix, EPSILON_SIGMA};
pub use utility::{utility_of_outcome, UtilityMatrix, UtilityVector};
