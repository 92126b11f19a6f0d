//! Backward-pass pieces shared by the optimistic and pessimistic learners.

use super::ridge::RidgeAccumulator;
use crate::error::Result;
use crate::game::{FeatureMap, RewardTables, TabularGameSpec};
use crate::stage::{quantize_value, solve_stage_sne, StageGame, StageSolution, TieBreak};

/// `Q`, bonus and clipped continuation of one step, each flat `[x][a][b]`.
#[derive(Clone, Debug)]
pub struct StepQ {
    pub q: Vec<f64>,
    pub bonus: Vec<f64>,
    pub continuation: Vec<f64>,
}

/// `Q_h = r_{l,h} + clip(φᵀw ± β√(φᵀΛ⁻¹φ), ±(H−h))` with `sign = +1` for
/// optimism and `−1` for pessimism. Steps are 0-based, so the clip bound is
/// `H − h − 1`.
#[allow(clippy::too_many_arguments)]
pub fn build_q(
    spec: &TabularGameSpec,
    rewards: &RewardTables,
    features: &FeatureMap,
    acc: &RidgeAccumulator,
    h: usize,
    beta: f64,
    sign: f64,
    v_next: &[f64],
) -> StepQ {
    let w = acc.regress(h, features, v_next);
    let inv = &acc.step(h).inverse;
    let rem = (spec.horizon() - h - 1) as f64;
    let nb = spec.num_profiles();
    let per_step = spec.cells_per_step();
    let mut q = Vec::with_capacity(per_step);
    let mut bonus = Vec::with_capacity(per_step);
    let mut continuation = Vec::with_capacity(per_step);
    let mut cache: Vec<Option<(f64, f64)>> = vec![None; features.num_keys()];
    for x in 0..spec.num_states() {
        for a in 0..spec.leader_actions() {
            for b in 0..nb {
                let key = features.key(x, a, b);
                let (fit, width) = *cache[key].get_or_insert_with(|| {
                    let quad = features.quad_form(key, inv).max(0.0);
                    (features.dot(key, &w), quad.sqrt())
                });
                let gamma = beta * width;
                let cont = (fit + sign * gamma).clamp(-rem, rem);
                let r = rewards.leader[h * per_step + spec.step_cell(x, a, b)];
                q.push(r + cont);
                bonus.push(gamma);
                continuation.push(cont);
            }
        }
    }
    StepQ {
        q,
        bonus,
        continuation,
    }
}

/// Policies and values of one step extracted from `Q`.
#[derive(Clone, Debug)]
pub struct StepPolicy {
    pub stages: Vec<StageSolution>,
    /// `V_h(x) = E_{π×ν} Q_h(x,·,·)` with the unquantized `Q`.
    pub values: Vec<f64>,
}

/// Solves the stage game on `r_l + quantize(continuation)` at every state.
pub fn extract_step(
    spec: &TabularGameSpec,
    rewards: &RewardTables,
    h: usize,
    step: &StepQ,
    epsilon: f64,
    tiebreak: TieBreak,
) -> Result<StepPolicy> {
    let al = spec.leader_actions();
    let nb = spec.num_profiles();
    let per_state = al * nb;
    let per_step = spec.cells_per_step();
    let mut stages = Vec::with_capacity(spec.num_states());
    let mut values = Vec::with_capacity(spec.num_states());
    for x in 0..spec.num_states() {
        let base = x * per_state;
        let start = h * per_step + base;
        let leader: Vec<f64> = (0..per_state)
            .map(|i| rewards.leader[start + i] + quantize_value(step.continuation[base + i], epsilon))
            .collect();
        let followers = rewards
            .followers
            .iter()
            .map(|r| r[start..start + per_state].to_vec())
            .collect();
        let game = StageGame::new(al, spec.follower_actions().to_vec(), leader, followers)?;
        let sol = solve_stage_sne(&game, tiebreak)?;
        let b = sol.follower_profile;
        values.push(
            sol.leader_mixed
                .iter()
                .enumerate()
                .map(|(a, p)| p * step.q[base + a * nb + b])
                .sum(),
        );
        stages.push(sol);
    }
    Ok(StepPolicy { stages, values })
}
