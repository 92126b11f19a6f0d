//! Reward-free exploration, commit-on-estimates, and the ε-response gap.

mod explore;
mod gap;

pub use explore::{
    reward_free_explore, EmpiricalRewards, ExplorationPolicy, ExplorationPolicySet, ExploreConfig,
    HiddenRewardEnv, RewardNoise, EXPLORER_NAME,
};
pub use gap::{gap_epsilon, relaxed_response_value, GapReport};

use crate::error::Result;
use crate::game::TabularGameSpec;
use crate::online::{run_ovi_sne, LearnerConfig, OnlineRunReport};
use crate::planner::SnePlan;

/// Runs the online learner planning with `estimates` in place of the true
/// rewards. Regret in the report is measured on `env`'s true rewards
/// against `truth`.
pub fn commit_with_estimated_rewards(
    env: &TabularGameSpec,
    estimates: &EmpiricalRewards,
    config: &LearnerConfig,
    truth: &SnePlan,
) -> Result<OnlineRunReport> {
    estimates.as_game(env)?;
    run_ovi_sne(env, &estimates.rewards, config, truth)
}
