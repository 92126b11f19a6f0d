use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::spec::{JointActions, TabularGameSpec, PROB_TOL};
use crate::error::{Result, SneError};

/// One player's non-stationary policy: a distribution over actions for
/// every `(h, x)`, stored flat as `[h][x][action]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != horizon * num_states * num_actions {
            return Err(SneError::Shape(format!(
                "policy table has {} entries, expected {}",
                probs.len(),
                horizon * num_states * num_actions
            )));
        }
        let table = Self {
            horizon,
            num_states,
            num_actions,
            probs,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; horizon * num_states * num_actions],
        }
    }

    /// Point masses; `actions` is flat `[h][x]`.
    pub fn deterministic(horizon: usize, num_states: usize, num_actions: usize, actions: &[usize]) -> Self {
        assert_eq!(actions.len(), horizon * num_states);
        let mut probs = vec![0.0; horizon * num_states * num_actions];
        for (hx, &act) in actions.iter().enumerate() {
            probs[hx * num_actions + act] = 1.0;
        }
        Self {
            horizon,
            num_states,
            num_actions,
            probs,
        }
    }

    /// Independent Dirichlet(1) draws at every `(h, x)`.
    pub fn random<R: Rng + ?Sized>(horizon: usize, num_states: usize, num_actions: usize, rng: &mut R) -> Self {
        let mut probs = Vec::with_capacity(horizon * num_states * num_actions);
        for _ in 0..horizon * num_states {
            let draws: Vec<f64> = (0..num_actions).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            probs.extend(draws.iter().map(|d| d / total));
        }
        Self {
            horizon,
            num_states,
            num_actions,
            probs,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn dist(&self, h: usize, x: usize) -> &[f64] {
        let start = (h * self.num_states + x) * self.num_actions;
        &self.probs[start..start + self.num_actions]
    }

    pub fn set(&mut self, h: usize, x: usize, dist: &[f64]) {
        let start = (h * self.num_states + x) * self.num_actions;
        self.probs[start..start + self.num_actions].copy_from_slice(dist);
    }

    pub fn set_pure(&mut self, h: usize, x: usize, action: usize) {
        let start = (h * self.num_states + x) * self.num_actions;
        let row = &mut self.probs[start..start + self.num_actions];
        row.fill(0.0);
        row[action] = 1.0;
    }

    /// `alpha · self + (1 − alpha) · other`, state by state.
    pub fn mixture(&self, alpha: f64, other: &PolicyTable) -> PolicyTable {
        assert_eq!(self.probs.len(), other.probs.len());
        PolicyTable {
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(p, q)| alpha * p + (1.0 - alpha) * q)
                .collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for h in 0..self.horizon {
            for x in 0..self.num_states {
                let d = self.dist(h, x);
                if d.iter().any(|&p| p < -PROB_TOL || !p.is_finite()) {
                    return Err(SneError::InvalidGame(format!(
                        "negative probability in policy at (h={h}, x={x})"
                    )));
                }
                let sum: f64 = d.iter().sum();
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(SneError::InvalidGame(format!(
                        "policy at (h={h}, x={x}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Leader policy π together with one policy ν_i per follower.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub leader: PolicyTable,
    pub followers: Vec<PolicyTable>,
}

impl JointPolicy {
    pub fn uniform(spec: &TabularGameSpec) -> Self {
        let (h, s) = (spec.horizon(), spec.num_states());
        Self {
            leader: PolicyTable::uniform(h, s, spec.leader_actions()),
            followers: spec
                .follower_actions()
                .iter()
                .map(|&n| PolicyTable::uniform(h, s, n))
                .collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(spec: &TabularGameSpec, rng: &mut R) -> Self {
        let (h, s) = (spec.horizon(), spec.num_states());
        let leader = PolicyTable::random(h, s, spec.leader_actions(), rng);
        let followers = spec
            .follower_actions()
            .iter()
            .map(|&n| PolicyTable::random(h, s, n, rng))
            .collect();
        Self { leader, followers }
    }

    /// Leader policy paired with pure follower profiles, `profiles` flat
    /// `[h][x]` of joint indices.
    pub fn from_profiles(leader: PolicyTable, profiles: &[usize], joint: &JointActions) -> Self {
        let (h, s) = (leader.horizon(), leader.num_states());
        let mut followers: Vec<PolicyTable> = joint
            .sizes()
            .iter()
            .map(|&n| PolicyTable::uniform(h, s, n))
            .collect();
        for step in 0..h {
            for x in 0..s {
                let acts = joint.decode(profiles[step * s + x]);
                for (i, &b) in acts.iter().enumerate() {
                    followers[i].set_pure(step, x, b);
                }
            }
        }
        Self { leader, followers }
    }

    pub fn validate(&self, spec: &TabularGameSpec) -> Result<()> {
        let shape_ok = self.leader.horizon() == spec.horizon()
            && self.leader.num_states() == spec.num_states()
            && self.leader.num_actions() == spec.leader_actions()
            && self.followers.len() == spec.num_followers()
            && self
                .followers
                .iter()
                .zip(spec.follower_actions())
                .all(|(f, &n)| {
                    f.horizon() == spec.horizon()
                        && f.num_states() == spec.num_states()
                        && f.num_actions() == n
                });
        if !shape_ok {
            return Err(SneError::ShapeMismatch("policy does not match the game".into()));
        }
        self.leader.validate()?;
        for f in &self.followers {
            f.validate()?;
        }
        Ok(())
    }

    /// Distribution over joint follower profiles at `(h, x)`.
    pub fn profile_dist(&self, joint: &JointActions, h: usize, x: usize) -> Vec<f64> {
        (0..joint.total())
            .map(|b| {
                joint
                    .decode(b)
                    .iter()
                    .enumerate()
                    .map(|(i, &bi)| self.followers[i].dist(h, x)[bi])
                    .product()
            })
            .collect()
    }

    /// `π_h(a|x) · Π_i ν_{i,h}(b_i|x)` for every `(a, b)`, flat `[a][b]`.
    pub fn action_dist(&self, joint: &JointActions, h: usize, x: usize) -> Vec<f64> {
        let pb = self.profile_dist(joint, h, x);
        let pa = self.leader.dist(h, x);
        pa.iter()
            .flat_map(|&p| pb.iter().map(move |&q| p * q))
            .collect()
    }

    pub fn mixture(&self, alpha: f64, other: &JointPolicy) -> JointPolicy {
        JointPolicy {
            leader: self.leader.mixture(alpha, &other.leader),
            followers: self
                .followers
                .iter()
                .zip(&other.followers)
                .map(|(p, q)| p.mixture(alpha, q))
                .collect(),
        }
    }
}
