//! Pessimistic value iteration (PVI-SNE) from a logged dataset, with its
//! suboptimality certificate and coverage audit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SneError};
use crate::game::{one_hot_features, FeatureMap, FeatureMode, JointPolicy, OfflineDataset, RewardTables, TabularGameSpec};
use crate::online::{backward_pass, BonusSpec, RidgeAccumulator};
use crate::planner::{evaluate_policies, occupancy, prediction_error, SnePlan, ValueEstimates};
use crate::stage::TieBreak;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineConfig {
    /// Penalty scale β'.
    pub penalty: BonusSpec,
    /// Quantization step; `None` means `d/(KH)`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub tiebreak: TieBreak,
    pub mode: FeatureMode,
}

impl OfflineConfig {
    pub fn new(penalty: BonusSpec) -> Self {
        Self {
            penalty,
            epsilon: None,
            tiebreak: TieBreak::Optimistic,
            mode: FeatureMode::Joint,
        }
    }
}

/// Output of the pessimistic backward pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OfflinePlan {
    pub policy: JointPolicy,
    /// Joint follower profile at each `(h, x)`.
    pub profiles: Vec<usize>,
    pub estimates: ValueEstimates,
    /// `Γ_h` at every cell, flat `[h][x][a][b]`.
    pub penalty: Vec<f64>,
    /// `√(φᵀΛ_h⁻¹φ)` at every cell.
    pub widths: Vec<f64>,
    pub dim: usize,
    /// `Λ_h` for each step, row-major `d × d`.
    pub lambdas: Vec<Vec<f64>>,
    pub beta_prime: f64,
    pub epsilon: f64,
    pub num_episodes: usize,
    pub tiebreak: TieBreak,
    pub mode: FeatureMode,
    pub worst_certificate: f64,
}

impl OfflinePlan {
    pub fn lambda(&self, h: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.lambdas[h])
    }

    pub fn value(&self, h: usize, x: usize, num_states: usize) -> f64 {
        self.estimates.v[h * num_states + x]
    }
}

/// Fits every step on the whole dataset and extracts pessimistic stage
/// equilibria.
pub fn run_pvi_sne(
    spec: &TabularGameSpec,
    dataset: &OfflineDataset,
    rewards: &RewardTables,
    config: &OfflineConfig,
) -> Result<OfflinePlan> {
    if dataset.is_empty() {
        return Err(SneError::EmptyDataset);
    }
    config.penalty.validate()?;
    config.tiebreak.validate()?;
    dataset.check_shape(spec)?;
    let model = spec.with_rewards(rewards.clone())?;
    let (features, _) = one_hot_features(spec, config.mode)?;
    let hz = spec.horizon();
    let k = dataset.num_episodes();
    let dim = features.dim();
    let beta_prime = config.penalty.resolve(dim, hz, k);
    let epsilon = config.epsilon.unwrap_or(dim as f64 / (k as f64 * hz as f64));
    if !(epsilon > 0.0) {
        return Err(SneError::InvalidConfig(format!("epsilon {epsilon} must be positive")));
    }
    let mut acc = RidgeAccumulator::for_features(hz, &features, spec.num_states());
    for episode in &dataset.episodes {
        for (h, step) in episode.iter().enumerate() {
            let b = spec.joint().encode(&step.b);
            acc.record(h, &features, features.key(step.x, step.a, b), step.x_next);
        }
    }
    acc.refresh_inverses();
    let pass = backward_pass(&model, rewards, &features, &acc, beta_prime, -1.0, epsilon, config.tiebreak)?;
    let widths = widths(spec, &features, &acc);
    let penalty = widths.iter().map(|w| beta_prime * w).collect();
    Ok(OfflinePlan {
        policy: pass.policy,
        profiles: pass.profiles,
        estimates: pass.estimates,
        penalty,
        widths,
        dim,
        lambdas: (0..hz)
            .map(|h| acc.step(h).lambda.transpose().as_slice().to_vec())
            .collect(),
        beta_prime,
        epsilon,
        num_episodes: k,
        tiebreak: config.tiebreak,
        mode: config.mode,
        worst_certificate: pass.worst_certificate,
    })
}

fn widths(spec: &TabularGameSpec, features: &FeatureMap, acc: &RidgeAccumulator) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.horizon() * spec.cells_per_step());
    for h in 0..spec.horizon() {
        let inv = &acc.step(h).inverse;
        for x in 0..spec.num_states() {
            for a in 0..spec.leader_actions() {
                for b in 0..spec.num_profiles() {
                    out.push(features.quad_form(features.key(x, a, b), inv).max(0.0).sqrt());
                }
            }
        }
    }
    out
}

/// `V*_{l,1}(x) − V^{π̂,ν̂}_{l,1}(x)` for every start state `x`.
pub fn suboptimality_by_state(spec: &TabularGameSpec, plan: &OfflinePlan, truth: &SnePlan) -> Vec<f64> {
    let vt = evaluate_policies(spec, &plan.policy);
    (0..spec.num_states())
        .map(|x| truth.leader_value(0, x) - vt.leader_v(0, x))
        .collect()
}

/// `V*_{l,1}(x_1) − V^{π̂,ν̂}_{l,1}(x_1)`.
pub fn suboptimality(spec: &TabularGameSpec, plan: &OfflinePlan, truth: &SnePlan) -> f64 {
    suboptimality_by_state(spec, plan, truth)[spec.initial_state()]
}

/// `3β' Σ_h E_{π*,ν*}[√(φᵀΛ_h⁻¹φ)]` with the expectation taken exactly.
pub fn theorem_bound(spec: &TabularGameSpec, truth: &SnePlan, plan: &OfflinePlan) -> f64 {
    let rho = occupancy(spec, &truth.policy);
    3.0 * plan.beta_prime * rho.iter().zip(&plan.widths).map(|(r, w)| r * w).sum::<f64>()
}

/// Prediction error of the plan's estimates under the model with `rewards`.
pub fn plan_prediction_error(spec: &TabularGameSpec, rewards: &RewardTables, plan: &OfflinePlan) -> Result<Vec<f64>> {
    Ok(prediction_error(&spec.with_rewards(rewards.clone())?, &plan.estimates))
}

/// Largest `c ≥ 0` with `Λ_h ⪰ I + c·K·E_{π*,ν*}[φφᵀ]` at every step.
pub fn coverage_margin(spec: &TabularGameSpec, plan: &OfflinePlan, truth: &SnePlan) -> Result<f64> {
    let (features, _) = one_hot_features(spec, plan.mode)?;
    let rho = occupancy(spec, &truth.policy);
    let cells = spec.cells_per_step();
    let k = plan.num_episodes as f64;
    let mut best = f64::INFINITY;
    for h in 0..spec.horizon() {
        let mut sigma = DMatrix::zeros(plan.dim, plan.dim);
        for x in 0..spec.num_states() {
            for a in 0..spec.leader_actions() {
                for b in 0..spec.num_profiles() {
                    let w = rho[h * cells + spec.step_cell(x, a, b)];
                    if w == 0.0 {
                        continue;
                    }
                    let phi = features.sparse(features.key(x, a, b));
                    for &(i, vi) in phi {
                        for &(j, vj) in phi {
                            sigma[(i, j)] += w * vi * vj;
                        }
                    }
                }
            }
        }
        let gain = plan.lambda(h) - DMatrix::identity(plan.dim, plan.dim);
        best = best.min(max_scaling(&gain, &(sigma * k)));
    }
    Ok(if best.is_finite() { best.max(0.0) } else { 0.0 })
}

/// Largest `c` with `a − c·b ⪰ 0` for PSD `a` and `b`, via the largest
/// eigenvalue of `L⁻¹ b L⁻ᵀ` where `L Lᵀ` is a slightly regularized `a`.
pub fn max_scaling(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let reg = a + DMatrix::identity(n, n) * 1e-10;
    let chol = reg.cholesky().expect("regularized PSD matrix has a Cholesky factor");
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let m = &l_inv * b * l_inv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let top = sym.symmetric_eigen().eigenvalues.max();
    if top <= 1e-300 {
        f64::INFINITY
    } else {
        1.0 / top
    }
}
