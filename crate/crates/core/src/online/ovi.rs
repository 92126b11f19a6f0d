use serde::{Deserialize, Serialize};

use super::lsvi::{build_q, extract_step};
use super::ridge::RidgeAccumulator;
use crate::error::{Result, SneError};
use crate::game::{
    one_hot_features, sample_episode, FeatureMode, JointPolicy, PolicyTable, RewardTables,
    TabularGameSpec,
};
use crate::planner::{
    decompose_episode, evaluate_policies, myopic_best_response, prediction_error, SnePlan,
    ValueEstimates,
};
use crate::rng::episode_rng;
use crate::stage::TieBreak;

/// Prediction errors above this count as optimism violations.
pub const OPTIMISM_TOL: f64 = 1e-7;
/// Slack on the lower side of the prediction-error band.
pub const BAND_TOL: f64 = 1e-6;

/// `C · d · H · √log(factor · d · H · K / p)`.
pub fn theorem_beta(c: f64, p: f64, log_factor: f64, dim: usize, horizon: usize, episodes: usize) -> f64 {
    let arg = log_factor * dim as f64 * horizon as f64 * episodes as f64 / p;
    c * dim as f64 * horizon as f64 * arg.ln().max(0.0).sqrt()
}

fn default_log_factor() -> f64 {
    2.0
}

/// Bonus scale: a fixed value or the theorem form with a chosen constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BonusSpec {
    Fixed {
        beta: f64,
    },
    Theorem {
        c: f64,
        p: f64,
        #[serde(default = "default_log_factor")]
        log_factor: f64,
    },
}

impl BonusSpec {
    pub fn theorem(c: f64, p: f64) -> Self {
        BonusSpec::Theorem {
            c,
            p,
            log_factor: default_log_factor(),
        }
    }

    pub fn resolve(&self, dim: usize, horizon: usize, episodes: usize) -> f64 {
        match *self {
            BonusSpec::Fixed { beta } => beta,
            BonusSpec::Theorem { c, p, log_factor } => {
                theorem_beta(c, p, log_factor, dim, horizon, episodes)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BonusSpec::Fixed { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(SneError::InvalidConfig(format!("beta {beta} must be finite and ≥ 0")))
            }
            BonusSpec::Theorem { c, p, log_factor } => {
                if !(c >= 0.0) || !(p > 0.0 && p < 1.0) || !(log_factor > 0.0) {
                    Err(SneError::InvalidConfig(format!(
                        "theorem bonus needs C ≥ 0, p in (0,1), factor > 0; got {c}, {p}, {log_factor}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub episodes: usize,
    pub bonus: BonusSpec,
    /// Quantization step; `None` means `1/(KH)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub tiebreak: TieBreak,
    pub mode: FeatureMode,
    pub seed: u64,
    /// Record the per-episode regret decomposition.
    #[serde(default)]
    pub decompose: bool,
    /// Compare follower responses with the exact myopic response.
    #[serde(default)]
    pub check_responses: bool,
}

impl LearnerConfig {
    pub fn new(episodes: usize, bonus: BonusSpec, seed: u64) -> Self {
        Self {
            episodes,
            bonus,
            epsilon: None,
            tiebreak: TieBreak::Optimistic,
            mode: FeatureMode::Joint,
            seed,
            decompose: false,
            check_responses: false,
        }
    }

    pub fn epsilon_for(&self, horizon: usize) -> f64 {
        self.epsilon
            .unwrap_or(1.0 / (self.episodes as f64 * horizon as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(SneError::InvalidConfig("need at least one episode".into()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(SneError::InvalidConfig(format!("epsilon {eps} must be positive")));
            }
        }
        self.bonus.validate()?;
        self.tiebreak.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub lhs: f64,
    pub computational_error: f64,
    pub statistical_error: f64,
    pub randomness: f64,
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub k: usize,
    pub leader_return: f64,
    pub v_star: f64,
    /// Exact value of the executed policies from the initial state.
    pub v_policy: f64,
    pub v_estimate: f64,
    pub regret_inst: f64,
    pub regret_cum: f64,
    /// Cells with prediction error above [`OPTIMISM_TOL`].
    pub optimism_violations: usize,
    /// Cells with prediction error below `−2 min(H, Γ) − BAND_TOL`.
    pub lower_bound_violations: usize,
    pub bonus_sum: f64,
    pub worst_certificate: f64,
    /// Visited states where the followers' profile differs from the exact
    /// myopic response to the leader's policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_mismatches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRunReport {
    pub config: LearnerConfig,
    pub dim: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub episodes: Vec<EpisodeRecord>,
    pub final_policy: JointPolicy,
}

impl OnlineRunReport {
    pub fn regret(&self) -> f64 {
        self.episodes.last().map_or(0.0, |e| e.regret_cum)
    }

    pub fn regret_at(&self, k: usize) -> f64 {
        self.episodes[k - 1].regret_cum
    }

    pub fn worst_certificate(&self) -> f64 {
        self.episodes
            .iter()
            .map(|e| e.worst_certificate)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Policies and estimates produced by one backward pass.
pub(crate) struct BackwardPass {
    pub policy: JointPolicy,
    pub profiles: Vec<usize>,
    pub estimates: ValueEstimates,
    pub bonus: Vec<f64>,
    pub worst_certificate: f64,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_pass(
    spec: &TabularGameSpec,
    rewards: &RewardTables,
    features: &crate::game::FeatureMap,
    acc: &RidgeAccumulator,
    beta: f64,
    sign: f64,
    epsilon: f64,
    tiebreak: TieBreak,
) -> Result<BackwardPass> {
    let s = spec.num_states();
    let hz = spec.horizon();
    let cells = spec.cells_per_step();
    let mut v = vec![0.0; (hz + 1) * s];
    let mut q = vec![0.0; hz * cells];
    let mut bonus = vec![0.0; hz * cells];
    let mut leader = PolicyTable::uniform(hz, s, spec.leader_actions());
    let mut profiles = vec![0; hz * s];
    let mut worst = f64::INFINITY;
    for h in (0..hz).rev() {
        let step = build_q(spec, rewards, features, acc, h, beta, sign, &v[(h + 1) * s..(h + 2) * s]);
        let pol = extract_step(spec, rewards, h, &step, epsilon, tiebreak)?;
        for (x, sol) in pol.stages.iter().enumerate() {
            leader.set(h, x, &sol.leader_mixed);
            profiles[h * s + x] = sol.follower_profile;
            worst = worst.min(sol.worst_certificate());
        }
        v[h * s..(h + 1) * s].copy_from_slice(&pol.values);
        q[h * cells..(h + 1) * cells].copy_from_slice(&step.q);
        bonus[h * cells..(h + 1) * cells].copy_from_slice(&step.bonus);
    }
    Ok(BackwardPass {
        policy: JointPolicy::from_profiles(leader, &profiles, spec.joint()),
        profiles,
        estimates: ValueEstimates { q, v },
        bonus,
        worst_certificate: worst,
    })
}

/// Optimistic least-squares value iteration with stage equilibria.
///
/// `env` supplies transitions and the true rewards used for regret;
/// `rewards` are the tables the learner plans with.
pub fn run_ovi_sne(
    env: &TabularGameSpec,
    rewards: &RewardTables,
    config: &LearnerConfig,
    truth: &SnePlan,
) -> Result<OnlineRunReport> {
    config.validate()?;
    if truth.tiebreak != config.tiebreak {
        return Err(SneError::ConfigMismatch(format!(
            "reference plan uses {} tie-breaking, learner uses {}",
            truth.tiebreak.name(),
            config.tiebreak.name()
        )));
    }
    let model = env.with_rewards(rewards.clone())?;
    let (features, _) = one_hot_features(env, config.mode)?;
    let hz = env.horizon();
    let s = env.num_states();
    let cells = env.cells_per_step();
    let beta = config.bonus.resolve(features.dim(), hz, config.episodes);
    let epsilon = config.epsilon_for(hz);
    let x1 = env.initial_state();
    let v_star = truth.leader_value(0, x1);
    let mut acc = RidgeAccumulator::for_features(hz, &features, s);
    let mut episodes = Vec::with_capacity(config.episodes);
    let mut regret_cum = 0.0;
    let mut last_policy = None;
    for k in 0..config.episodes {
        let pass = backward_pass(&model, rewards, &features, &acc, beta, 1.0, epsilon, config.tiebreak)?;
        let mut rng = episode_rng(config.seed, k as u64);
        let traj = sample_episode(env, &pass.policy, &mut rng);

        let v_policy = evaluate_policies(env, &pass.policy).leader_v(0, x1);
        let regret_inst = v_star - v_policy;
        regret_cum += regret_inst;
        let delta = prediction_error(&model, &pass.estimates);
        let optimism_violations = delta.iter().filter(|&&d| d > OPTIMISM_TOL).count();
        let lower_bound_violations = delta
            .iter()
            .zip(&pass.bonus)
            .filter(|(&d, &g)| d < -2.0 * g.min(hz as f64) - BAND_TOL)
            .count();
        let bonus_sum = traj
            .steps
            .iter()
            .enumerate()
            .map(|(h, st)| {
                pass.bonus[h * cells + env.step_cell(st.state, st.leader_action, st.joint_action)]
                    .min(hz as f64)
            })
            .sum();
        let response_mismatches = if config.check_responses {
            let (_, exact) = myopic_best_response(&model, &pass.policy.leader, config.tiebreak)?;
            Some(
                traj.steps
                    .iter()
                    .enumerate()
                    .filter(|(h, st)| pass.profiles[h * s + st.state] != exact[h * s + st.state])
                    .count(),
            )
        } else {
            None
        };
        let decomposition = if config.decompose {
            let rep = decompose_episode(&model, &pass.estimates, &pass.policy, &truth.policy, &traj)?;
            Some(DecompositionSummary {
                lhs: rep.lhs,
                computational_error: rep.computational_error,
                statistical_error: rep.statistical_error,
                randomness: rep.randomness,
                identity_residual: rep.identity_residual,
            })
        } else {
            None
        };
        episodes.push(EpisodeRecord {
            k: k + 1,
            leader_return: traj.leader_return(),
            v_star,
            v_policy,
            v_estimate: pass.estimates.v[x1],
            regret_inst,
            regret_cum,
            optimism_violations,
            lower_bound_violations,
            bonus_sum,
            worst_certificate: pass.worst_certificate,
            response_mismatches,
            decomposition,
        });

        for (h, st) in traj.steps.iter().enumerate() {
            let key = features.key(st.state, st.leader_action, st.joint_action);
            acc.record(h, &features, key, st.next_state);
        }
        last_policy = Some(pass.policy);
    }
    Ok(OnlineRunReport {
        config: config.clone(),
        dim: features.dim(),
        beta,
        epsilon,
        episodes,
        final_policy: last_policy.expect("at least one episode"),
    })
}
