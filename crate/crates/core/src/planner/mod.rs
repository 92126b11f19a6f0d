//! Exact planning with a known model: equilibria, policy evaluation,
//! follower responses, occupancy measures and the per-episode regret
//! decomposition.

mod decomposition;
mod sne;
mod values;

pub use decomposition::{decompose_episode, prediction_error, DecompositionReport, ValueEstimates};
pub use sne::{exact_sne, follower_stage_payoffs, leader_stage_payoff, myopic_best_response, SnePlan};
pub use values::{evaluate_policies, occupancy, state_marginals, ValueTables};
