use serde::{Deserialize, Serialize};

use crate::error::{Result, SneError};
use crate::game::{PolicyTable, TabularGameSpec};
use crate::planner::{exact_sne, leader_stage_payoff, follower_stage_payoffs};
use crate::stage::{TieBreak, BR_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub epsilon: f64,
    pub gap: f64,
    /// Leader value at the optimistic equilibrium.
    pub v_star: f64,
    /// Best leader value over stagewise ε-responses, per candidate.
    pub v_eps: Vec<f64>,
    /// Leader value under the exact (leader-favoring) response, per candidate.
    pub v_br: Vec<f64>,
    /// Whether each candidate satisfies `V_ε ≥ V* − ε`.
    pub members: Vec<bool>,
}

/// Leader value from the initial state when the follower picks, at every
/// `(h, x)`, the action best for the leader among those within `slack` of
/// its stage maximum.
pub fn relaxed_response_value(spec: &TabularGameSpec, leader: &PolicyTable, slack: f64) -> f64 {
    let s = spec.num_states();
    let nb = spec.num_profiles();
    let mut next = vec![0.0; s];
    for h in (0..spec.horizon()).rev() {
        let mut current = vec![0.0; s];
        for (x, value) in current.iter_mut().enumerate() {
            let payoff = leader_stage_payoff(spec, h, x, &next);
            let follower = &follower_stage_payoffs(spec, h, x)[0];
            let mixed = leader.dist(h, x);
            let expect = |table: &[f64], b: usize| -> f64 {
                mixed.iter().enumerate().map(|(a, p)| p * table[a * nb + b]).sum()
            };
            let own: Vec<f64> = (0..nb).map(|b| expect(follower, b)).collect();
            let top = own.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            *value = (0..nb)
                .filter(|&b| own[b] >= top - slack - BR_TOL)
                .map(|b| expect(&payoff, b))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        next = current;
    }
    next[spec.initial_state()]
}

/// Largest leader gain from letting a myopic follower be `ε`-suboptimal at
/// each stage, over candidates whose relaxed value is within `ε` of the
/// equilibrium value.
pub fn gap_epsilon(spec: &TabularGameSpec, epsilon: f64, candidates: &[PolicyTable]) -> Result<GapReport> {
    if spec.num_followers() != 1 {
        return Err(SneError::MultiFollower(spec.num_followers()));
    }
    if !spec.is_leader_controller() {
        return Err(SneError::NotLeaderController);
    }
    if candidates.is_empty() {
        return Err(SneError::InvalidConfig("gap needs at least one candidate policy".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(SneError::InvalidConfig(format!("epsilon {epsilon} must be ≥ 0")));
    }
    for c in candidates {
        if c.horizon() != spec.horizon() || c.num_states() != spec.num_states() || c.num_actions() != spec.leader_actions() {
            return Err(SneError::ShapeMismatch("candidate policy does not match the game".into()));
        }
    }
    let v_star = exact_sne(spec, TieBreak::Optimistic)?.leader_value(0, spec.initial_state());
    let v_eps: Vec<f64> = candidates.iter().map(|c| relaxed_response_value(spec, c, epsilon)).collect();
    let v_br: Vec<f64> = candidates.iter().map(|c| relaxed_response_value(spec, c, 0.0)).collect();
    let members: Vec<bool> = v_eps.iter().map(|&v| v >= v_star - epsilon).collect();
    let gap = v_eps
        .iter()
        .zip(&v_br)
        .zip(&members)
        .filter(|(_, &m)| m)
        .map(|((e, b), _)| e - b)
        .fold(0.0, f64::max);
    Ok(GapReport {
        epsilon,
        gap,
        v_star,
        v_eps,
        v_br,
        members,
    })
}
