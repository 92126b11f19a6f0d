use serde::{Deserialize, Serialize};

use super::values::{evaluate_policies, occupancy};
use crate::error::{Result, SneError};
use crate::game::{JointPolicy, TabularGameSpec, Trajectory};

/// A learner's value estimates for one episode.
///
/// `q` is flat `[h][x][a][b]`; `v` is flat `[h][x]` including a zero step
/// `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimates {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl ValueEstimates {
    pub fn check_shape(&self, spec: &TabularGameSpec) -> Result<()> {
        let hz = spec.horizon();
        if self.q.len() != hz * spec.cells_per_step() || self.v.len() != (hz + 1) * spec.num_states() {
            return Err(SneError::ShapeMismatch(format!(
                "estimates have {} Q and {} V entries",
                self.q.len(),
                self.v.len()
            )));
        }
        Ok(())
    }
}

/// Model prediction error `r_l + P V_{h+1} − Q_h` at every cell, flat
/// `[h][x][a][b]`.
pub fn prediction_error(spec: &TabularGameSpec, est: &ValueEstimates) -> Vec<f64> {
    let s = spec.num_states();
    let cells = spec.cells_per_step();
    let nb = spec.num_profiles();
    let mut out = vec![0.0; spec.horizon() * cells];
    for h in 0..spec.horizon() {
        let next = &est.v[(h + 1) * s..(h + 2) * s];
        for x in 0..s {
            for a in 0..spec.leader_actions() {
                for b in 0..nb {
                    let i = h * cells + spec.step_cell(x, a, b);
                    out[i] = spec.leader_reward(h, x, a, b) + spec.expect_next(h, x, a, b, next) - est.q[i];
                }
            }
        }
    }
    out
}

/// One-episode split of the leader's value gap into optimization,
/// estimation and sampling terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `V^{ref}_1(x_1) − V^{executed}_1(x_1)`.
    pub lhs: f64,
    pub computational_error: f64,
    pub statistical_error: f64,
    pub randomness: f64,
    /// Prediction error at the realized cell of each step.
    pub delta_realized: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta2: Vec<f64>,
    pub identity_residual: f64,
}

/// Splits the value gap between `reference` and `executed` for one played
/// episode, with all expectations taken exactly.
pub fn decompose_episode(
    spec: &TabularGameSpec,
    estimates: &ValueEstimates,
    executed: &JointPolicy,
    reference: &JointPolicy,
    trajectory: &Trajectory,
) -> Result<DecompositionReport> {
    estimates.check_shape(spec)?;
    executed.validate(spec)?;
    reference.validate(spec)?;
    if trajectory.steps.len() != spec.horizon() {
        return Err(SneError::ShapeMismatch(format!(
            "trajectory has {} steps for horizon {}",
            trajectory.steps.len(),
            spec.horizon()
        )));
    }
    let s = spec.num_states();
    let cells = spec.cells_per_step();
    let nb = spec.num_profiles();
    let al = spec.leader_actions();
    let delta = prediction_error(spec, estimates);
    let truth = evaluate_policies(spec, executed);
    let reference_values = evaluate_policies(spec, reference);
    let rho = occupancy(spec, reference);

    let mut computational = 0.0;
    let mut expected_delta = 0.0;
    for h in 0..spec.horizon() {
        for x in 0..s {
            let base = h * cells + x * al * nb;
            let mass: f64 = rho[base..base + al * nb].iter().sum();
            if mass == 0.0 {
                continue;
            }
            let r = reference.action_dist(spec.joint(), h, x);
            let e = executed.action_dist(spec.joint(), h, x);
            let gap: f64 = (0..al * nb).map(|i| estimates.q[base + i] * (r[i] - e[i])).sum();
            computational += mass * gap;
            expected_delta += (0..al * nb).map(|i| rho[base + i] * delta[base + i]).sum::<f64>();
        }
    }

    let mut delta_realized = Vec::with_capacity(spec.horizon());
    let mut zeta1 = Vec::with_capacity(spec.horizon());
    let mut zeta2 = Vec::with_capacity(spec.horizon());
    for (h, step) in trajectory.steps.iter().enumerate() {
        let (x, a, b, xn) = (step.state, step.leader_action, step.joint_action, step.next_state);
        let cell = spec.step_cell(x, a, b);
        delta_realized.push(delta[h * cells + cell]);
        let v_gap = estimates.v[h * s + x] - truth.leader_v(h, x);
        let q_gap = estimates.q[h * cells + cell] - truth.q(0, h, cell);
        zeta1.push(v_gap - q_gap);
        let next_gap: Vec<f64> = (0..s)
            .map(|y| estimates.v[(h + 1) * s + y] - truth.leader_v(h + 1, y))
            .collect();
        zeta2.push(spec.expect_next(h, x, a, b, &next_gap) - next_gap[xn]);
    }
    let statistical = expected_delta - delta_realized.iter().sum::<f64>();
    let randomness = zeta1.iter().sum::<f64>() + zeta2.iter().sum::<f64>();
    let x1 = spec.initial_state();
    let lhs = reference_values.leader_v(0, x1) - truth.leader_v(0, x1);
    Ok(DecompositionReport {
        lhs,
        computational_error: computational,
        statistical_error: statistical,
        randomness,
        identity_residual: (lhs - computational - statistical - randomness).abs(),
        delta_realized,
        zeta1,
        zeta2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_game, sample_episode, GameDims, PolicyTable, RewardTables};
    use crate::rng::master_rng;

    fn estimates_from(spec: &TabularGameSpec, policy: &JointPolicy) -> ValueEstimates {
        let vt = evaluate_policies(spec, policy);
        ValueEstimates {
            q: vt.q[0].clone(),
            v: vt.v[0].clone(),
        }
    }

    #[test]
    fn exact_self_estimate_has_no_terms() {
        let g = random_game(&GameDims::new(3, 2, vec![2], 3), 2);
        let pol = JointPolicy::random(&g, &mut master_rng(1));
        let est = estimates_from(&g, &pol);
        let traj = sample_episode(&g, &pol, &mut master_rng(4));
        let rep = decompose_episode(&g, &est, &pol, &pol, &traj).unwrap();
        for v in [rep.lhs, rep.computational_error, rep.statistical_error, rep.randomness] {
            assert!(v.abs() < 1e-12);
        }
        assert!(rep.identity_residual < 1e-12);
    }

    #[test]
    fn identity_holds_for_arbitrary_consistent_estimates() {
        let g = random_game(&GameDims::new(3, 2, vec![2, 2], 3), 7);
        let mut rng = master_rng(9);
        for _ in 0..20 {
            let executed = JointPolicy::random(&g, &mut rng);
            let reference = JointPolicy::random(&g, &mut rng);
            // Arbitrary Q with V the executed-policy average of Q.
            let q: Vec<f64> = (0..g.horizon() * g.cells_per_step())
                .map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0))
                .collect();
            let s = g.num_states();
            let per = g.leader_actions() * g.num_profiles();
            let mut v = vec![0.0; (g.horizon() + 1) * s];
            for h in 0..g.horizon() {
                for x in 0..s {
                    let d = executed.action_dist(g.joint(), h, x);
                    let base = h * g.cells_per_step() + x * per;
                    v[h * s + x] = (0..per).map(|i| d[i] * q[base + i]).sum();
                }
            }
            let est = ValueEstimates { q, v };
            let traj = sample_episode(&g, &executed, &mut rng);
            let rep = decompose_episode(&g, &est, &executed, &reference, &traj).unwrap();
            assert!(rep.identity_residual <= 1e-10, "{}", rep.identity_residual);
        }
    }

    #[test]
    fn perfect_regression_has_no_statistical_error() {
        // Two states, deterministic moves, exact zero-bonus estimates.
        let dims = GameDims::new(2, 2, vec![1], 2);
        let cells = 2 * 2 * 2;
        let mut transition = vec![0.0; cells * 2];
        for h in 0..2 {
            for x in 0..2 {
                for a in 0..2 {
                    let cell = (h * 2 + x) * 2 + a;
                    transition[cell * 2 + a] = 1.0;
                }
            }
        }
        let leader = vec![0.1, 0.5, -0.2, 0.3, 0.7, 0.0, 0.4, -0.6];
        let g = TabularGameSpec::new(
            dims,
            0,
            RewardTables {
                leader,
                followers: vec![vec![0.0; cells]],
            },
            transition,
        )
        .unwrap();
        let executed = JointPolicy {
            leader: PolicyTable::deterministic(2, 2, 2, &[1, 0, 1, 1]),
            followers: vec![PolicyTable::uniform(2, 2, 1)],
        };
        let reference = JointPolicy {
            leader: PolicyTable::deterministic(2, 2, 2, &[0, 0, 0, 0]),
            followers: vec![PolicyTable::uniform(2, 2, 1)],
        };
        // Q = r + P V with V the greedy-executed average: δ ≡ 0.
        let vt = evaluate_policies(&g, &executed);
        let est = ValueEstimates {
            q: vt.q[0].clone(),
            v: vt.v[0].clone(),
        };
        let traj = sample_episode(&g, &executed, &mut master_rng(0));
        let rep = decompose_episode(&g, &est, &executed, &reference, &traj).unwrap();
        assert_eq!(rep.statistical_error, 0.0);
        assert!(rep.identity_residual < 1e-12);
        // reference stays in x=0: 0.1 + 0.7; executed moves to x=1: 0.5 - 0.6
        assert!((rep.lhs - (0.8 - -0.1)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = random_game(&GameDims::new(2, 2, vec![2], 2), 1);
        let pol = JointPolicy::uniform(&g);
        let traj = sample_episode(&g, &pol, &mut master_rng(0));
        let est = ValueEstimates { q: vec![0.0; 3], v: vec![0.0; 6] };
        assert!(matches!(
            decompose_episode(&g, &est, &pol, &pol, &traj),
            Err(SneError::ShapeMismatch(_))
        ));
    }
}
