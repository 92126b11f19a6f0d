use serde::{Deserialize, Serialize};

use super::values::evaluate_policies;
use crate::error::Result;
use crate::game::{JointPolicy, PolicyTable, TabularGameSpec};
use crate::stage::{respond, solve_stage_sne, StageGame, StageSolution, TieBreak};

/// Ground-truth equilibrium of a known game.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnePlan {
    pub tiebreak: TieBreak,
    pub policy: JointPolicy,
    /// Joint follower profile at each `(h, x)`, flat `[h][x]`.
    pub profiles: Vec<usize>,
    /// `V*_{l,h}(x)`, flat `[h][x]` with a zero step `H`.
    pub leader_values: Vec<f64>,
    /// Per follower, flat like `leader_values`.
    pub follower_values: Vec<Vec<f64>>,
    /// Stage solution at each `(h, x)`, flat `[h][x]`.
    pub stages: Vec<StageSolution>,
    pub num_states: usize,
}

impl SnePlan {
    pub fn leader_value(&self, h: usize, x: usize) -> f64 {
        self.leader_values[h * self.num_states + x]
    }

    pub fn worst_certificate(&self) -> f64 {
        self.stages
            .iter()
            .map(StageSolution::worst_certificate)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Leader stage payoff `r_l(x,·,·) + P V_next` as a flat `[a][b]` table.
pub fn leader_stage_payoff(spec: &TabularGameSpec, h: usize, x: usize, next: &[f64]) -> Vec<f64> {
    let nb = spec.num_profiles();
    let mut out = Vec::with_capacity(spec.leader_actions() * nb);
    for a in 0..spec.leader_actions() {
        for b in 0..nb {
            out.push(spec.leader_reward(h, x, a, b) + spec.expect_next(h, x, a, b, next));
        }
    }
    out
}

/// Follower stage payoffs `r_{f_i}(x,·,·)`, one flat `[a][b]` table each.
pub fn follower_stage_payoffs(spec: &TabularGameSpec, h: usize, x: usize) -> Vec<Vec<f64>> {
    let per_state = spec.leader_actions() * spec.num_profiles();
    let start = h * spec.cells_per_step() + x * per_state;
    spec.rewards()
        .followers
        .iter()
        .map(|r| r[start..start + per_state].to_vec())
        .collect()
}

/// Backward induction over stage equilibria with the true model.
pub fn exact_sne(spec: &TabularGameSpec, tiebreak: TieBreak) -> Result<SnePlan> {
    let s = spec.num_states();
    let hz = spec.horizon();
    let mut leader = PolicyTable::uniform(hz, s, spec.leader_actions());
    let mut profiles = vec![0; hz * s];
    let mut values = vec![0.0; (hz + 1) * s];
    let mut stages = vec![None; hz * s];
    for h in (0..hz).rev() {
        let (done, rest) = values.split_at_mut((h + 1) * s);
        let next = &rest[..s];
        let current = &mut done[h * s..];
        for x in 0..s {
            let game = StageGame::new(
                spec.leader_actions(),
                spec.follower_actions().to_vec(),
                leader_stage_payoff(spec, h, x, next),
                follower_stage_payoffs(spec, h, x),
            )?;
            let sol = solve_stage_sne(&game, tiebreak)?;
            leader.set(h, x, &sol.leader_mixed);
            profiles[h * s + x] = sol.follower_profile;
            current[x] = sol.leader_value;
            stages[h * s + x] = Some(sol);
        }
    }
    let policy = JointPolicy::from_profiles(leader, &profiles, spec.joint());
    let tables = evaluate_policies(spec, &policy);
    Ok(SnePlan {
        tiebreak,
        policy,
        profiles,
        leader_values: values,
        follower_values: tables.v[1..].to_vec(),
        stages: stages.into_iter().map(|s| s.expect("every stage solved")).collect(),
        num_states: s,
    })
}

/// Myopic follower response to a leader policy: the pure Nash profile at
/// each `(h, x)` that is best (optimistic) or worst (pessimistic) for the
/// leader's continuation value under that same response.
pub fn myopic_best_response(
    spec: &TabularGameSpec,
    leader: &PolicyTable,
    tiebreak: TieBreak,
) -> Result<(JointPolicy, Vec<usize>)> {
    let s = spec.num_states();
    let hz = spec.horizon();
    let mut profiles = vec![0; hz * s];
    let mut next = vec![0.0; s];
    for h in (0..hz).rev() {
        let mut current = vec![0.0; s];
        for x in 0..s {
            let payoff = leader_stage_payoff(spec, h, x, &next);
            let mixed = leader.dist(h, x);
            let b = respond(
                spec.joint(),
                &follower_stage_payoffs(spec, h, x),
                &payoff,
                mixed,
                tiebreak,
            )?;
            profiles[h * s + x] = b;
            let nb = spec.num_profiles();
            current[x] = mixed.iter().enumerate().map(|(a, p)| p * payoff[a * nb + b]).sum();
        }
        next = current;
    }
    Ok((
        JointPolicy::from_profiles(leader.clone(), &profiles, spec.joint()),
        profiles,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_game, GameDims, RewardTables};
    use crate::rng::master_rng;
    use crate::stage::CERT_TOL;

    #[test]
    fn horizon_one_is_a_stage_solve() {
        let g = random_game(&GameDims::new(3, 3, vec![2], 1), 5);
        for tb in [TieBreak::Optimistic, TieBreak::pessimistic()] {
            let plan = exact_sne(&g, tb).unwrap();
            for x in 0..3 {
                let game = StageGame::new(
                    3,
                    vec![2],
                    leader_stage_payoff(&g, 0, x, &[0.0; 3]),
                    follower_stage_payoffs(&g, 0, x),
                )
                .unwrap();
                let sol = solve_stage_sne(&game, tb).unwrap();
                assert_eq!(plan.stages[x], sol);
                assert_eq!(plan.leader_value(0, x), sol.leader_value);
            }
        }
    }

    fn single_agent_optimum(g: &TabularGameSpec) -> Vec<f64> {
        let s = g.num_states();
        let mut v = vec![0.0; s];
        let mut out = vec![0.0; (g.horizon() + 1) * s];
        for h in (0..g.horizon()).rev() {
            let nv: Vec<f64> = (0..s)
                .map(|x| {
                    (0..g.leader_actions())
                        .map(|a| g.leader_reward(h, x, a, 0) + g.expect_next(h, x, a, 0, &v))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            out[h * s..(h + 1) * s].copy_from_slice(&nv);
            v = nv;
        }
        out
    }

    #[test]
    fn dummy_follower_reduces_to_value_iteration() {
        for seed in 0..5 {
            let g = random_game(&GameDims::new(4, 3, vec![1], 4), seed);
            let plan = exact_sne(&g, TieBreak::Optimistic).unwrap();
            let vi = single_agent_optimum(&g);
            for (p, q) in plan.leader_values.iter().zip(&vi) {
                assert!((p - q).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn plan_values_match_evaluation() {
        for seed in 0..5 {
            let g = random_game(&GameDims::new(3, 2, vec![2], 3), seed);
            for tb in [TieBreak::Optimistic, TieBreak::pessimistic()] {
                let plan = exact_sne(&g, tb).unwrap();
                let vt = evaluate_policies(&g, &plan.policy);
                for (i, &v) in plan.leader_values.iter().enumerate() {
                    assert!((v - vt.v[0][i]).abs() <= 1e-9);
                }
                assert!(plan.worst_certificate() >= -CERT_TOL);
                for h in 0..3 {
                    for x in 0..3 {
                        assert!(plan.leader_value(h, x).abs() <= (3 - h) as f64 + 1e-9);
                    }
                }
            }
        }
    }

    fn deterministic_leader(g: &TabularGameSpec, code: usize) -> PolicyTable {
        let n = g.horizon() * g.num_states();
        let mut c = code;
        let actions: Vec<usize> = (0..n)
            .map(|_| {
                let a = c % g.leader_actions();
                c /= g.leader_actions();
                a
            })
            .collect();
        PolicyTable::deterministic(g.horizon(), g.num_states(), g.leader_actions(), &actions)
    }

    #[test]
    fn equilibrium_beats_every_deterministic_leader() {
        for seed in 0..5 {
            let g = random_game(&GameDims::new(2, 2, vec![2], 2), seed);
            let plan = exact_sne(&g, TieBreak::Optimistic).unwrap();
            for code in 0..16 {
                let leader = deterministic_leader(&g, code);
                let (pol, _) = myopic_best_response(&g, &leader, TieBreak::Optimistic).unwrap();
                let v = evaluate_policies(&g, &pol).leader_v(0, 0);
                assert!(plan.leader_value(0, 0) >= v - 1e-9);
            }
        }
    }

    #[test]
    fn equilibrium_beats_random_leaders() {
        let g = random_game(&GameDims::new(3, 2, vec![3], 3), 11);
        let plan = exact_sne(&g, TieBreak::Optimistic).unwrap();
        let mut rng = master_rng(0);
        for _ in 0..200 {
            let leader = PolicyTable::random(3, 3, 2, &mut rng);
            let (pol, _) = myopic_best_response(&g, &leader, TieBreak::Optimistic).unwrap();
            let v = evaluate_policies(&g, &pol).leader_v(0, 0);
            assert!(plan.leader_value(0, 0) >= v - 1e-9);
        }
    }

    #[test]
    fn pessimistic_value_is_lower() {
        for seed in 0..20 {
            let g = random_game(&GameDims::new(3, 2, vec![2], 3), seed);
            let o = exact_sne(&g, TieBreak::Optimistic).unwrap();
            let p = exact_sne(&g, TieBreak::pessimistic()).unwrap();
            assert!(p.leader_value(0, 0) <= o.leader_value(0, 0) + 1e-9);
        }
    }

    #[test]
    fn best_response_reproduces_plan() {
        for seed in 0..5 {
            let g = random_game(&GameDims::new(3, 3, vec![2], 3), seed);
            for tb in [TieBreak::Optimistic, TieBreak::pessimistic()] {
                let plan = exact_sne(&g, tb).unwrap();
                let (_, profiles) = myopic_best_response(&g, &plan.policy.leader, tb).unwrap();
                assert_eq!(profiles, plan.profiles);
            }
        }
    }

    #[test]
    fn ties_are_split_by_leader_value() {
        let dims = GameDims::new(1, 1, vec![3], 1);
        let g = TabularGameSpec::new(
            dims,
            0,
            RewardTables {
                leader: vec![0.2, 0.9, -0.4],
                followers: vec![vec![0.5; 3]],
            },
            vec![1.0; 3],
        )
        .unwrap();
        let leader = PolicyTable::uniform(1, 1, 1);
        let (_, o) = myopic_best_response(&g, &leader, TieBreak::Optimistic).unwrap();
        let (_, p) = myopic_best_response(&g, &leader, TieBreak::pessimistic()).unwrap();
        assert_eq!((o[0], p[0]), (1, 2));
    }

    #[test]
    fn dominant_follower_action_wins_any_tiebreak() {
        let g = random_game(&GameDims::new(2, 2, vec![3], 2), 1);
        let cells = g.rewards().leader.len();
        let followers = vec![(0..cells).map(|c| if c % 3 == 2 { 1.0 } else { 0.0 }).collect()];
        let g = g
            .with_rewards(RewardTables {
                leader: g.rewards().leader.clone(),
                followers,
            })
            .unwrap();
        let leader = PolicyTable::random(2, 2, 2, &mut master_rng(1));
        for tb in [TieBreak::Optimistic, TieBreak::pessimistic()] {
            let (_, p) = myopic_best_response(&g, &leader, tb).unwrap();
            assert!(p.iter().all(|&b| b == 2));
        }
    }
}
