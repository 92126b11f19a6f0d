use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Result, SneError};

pub const FORMAT_VERSION: u64 = 1;

/// Probability mass tolerance used by validation.
pub const PROB_TOL: f64 = 1e-9;

/// Row-major encoding of a joint follower action `(b_1, ..., b_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointActions {
    sizes: Vec<usize>,
    total: usize,
}

impl JointActions {
    pub fn new(sizes: Vec<usize>) -> Self {
        let total = sizes.iter().product();
        Self { sizes, total }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_followers(&self) -> usize {
        self.sizes.len()
    }

    /// Number of joint profiles.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.sizes.len());
        actions
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&b, &n)| acc * n + b)
    }

    pub fn decode(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for i in (0..self.sizes.len()).rev() {
            out[i] = joint % self.sizes[i];
            joint /= self.sizes[i];
        }
        out
    }

    /// Joint index obtained by replacing follower `i`'s action in `joint`.
    pub fn deviate(&self, joint: usize, i: usize, action: usize) -> usize {
        let mut acts = self.decode(joint);
        acts[i] = action;
        self.encode(&acts)
    }
}

/// Sizes of a tabular game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDims {
    pub num_states: usize,
    pub horizon: usize,
    pub leader_actions: usize,
    pub follower_actions: Vec<usize>,
}

impl GameDims {
    pub fn new(
        num_states: usize,
        leader_actions: usize,
        follower_actions: Vec<usize>,
        horizon: usize,
    ) -> Self {
        Self {
            num_states,
            horizon,
            leader_actions,
            follower_actions,
        }
    }

    fn check(&self) -> Result<()> {
        if self.num_states == 0 || self.horizon == 0 || self.leader_actions == 0 {
            return Err(SneError::Shape(
                "num_states, horizon and leader_actions must be positive".into(),
            ));
        }
        if self.follower_actions.is_empty() || self.follower_actions.contains(&0) {
            return Err(SneError::Shape(
                "at least one follower, each with a positive action count".into(),
            ));
        }
        Ok(())
    }
}

/// Reward tensors of every player, flattened `[h][x][a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardTables {
    pub leader: Vec<f64>,
    pub followers: Vec<Vec<f64>>,
}

impl RewardTables {
    /// Player 0 is the leader, player `i + 1` is follower `i`.
    pub fn player(&self, player: usize) -> &[f64] {
        if player == 0 {
            &self.leader
        } else {
            &self.followers[player - 1]
        }
    }
}

/// Episodic general-sum Markov game with one leader and `N` followers.
///
/// Steps are 0-based: `h` ranges over `0..horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularGameSpec {
    dims: GameDims,
    joint: JointActions,
    initial_state: usize,
    rewards: RewardTables,
    transition: Vec<f64>,
}

/// One violated invariant of a [`TabularGameSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    ProbabilityMass { h: usize, x: usize, a: usize, b: usize, sum: f64 },
    NegativeProbability { h: usize, x: usize, a: usize, b: usize, next: usize, p: f64 },
    RewardOutOfRange { player: usize, h: usize, x: usize, a: usize, b: usize, value: f64 },
    Shape(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilityMass { h, x, a, b, sum } => {
                write!(f, "probability mass ≠ 1 at ({h},{x},{a},{b}): {sum}")
            }
            Violation::NegativeProbability { h, x, a, b, next, p } => {
                write!(f, "negative probability at ({h},{x},{a},{b}) -> {next}: {p}")
            }
            Violation::RewardOutOfRange { player, h, x, a, b, value } => write!(
                f,
                "reward out of [-1,1] for player {player} at ({h},{x},{a},{b}): {value}"
            ),
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl TabularGameSpec {
    /// Builds a game from flat `[h][x][a][b]` reward tensors and a flat
    /// `[h][x][a][b][x']` transition tensor. Only lengths are checked here;
    /// value invariants are reported by [`TabularGameSpec::validate`].
    pub fn new(
        dims: GameDims,
        initial_state: usize,
        rewards: RewardTables,
        transition: Vec<f64>,
    ) -> Result<Self> {
        dims.check()?;
        let joint = JointActions::new(dims.follower_actions.clone());
        let cells = dims.horizon * dims.num_states * dims.leader_actions * joint.total();
        if rewards.leader.len() != cells {
            return Err(SneError::Shape(format!(
                "leader reward has {} entries, expected {cells}",
                rewards.leader.len()
            )));
        }
        if rewards.followers.len() != dims.follower_actions.len() {
            return Err(SneError::Shape(format!(
                "{} follower reward tensors for {} followers",
                rewards.followers.len(),
                dims.follower_actions.len()
            )));
        }
        for (i, r) in rewards.followers.iter().enumerate() {
            if r.len() != cells {
                return Err(SneError::Shape(format!(
                    "follower {i} reward has {} entries, expected {cells}",
                    r.len()
                )));
            }
        }
        if transition.len() != cells * dims.num_states {
            return Err(SneError::Shape(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                cells * dims.num_states
            )));
        }
        Ok(Self {
            dims,
            joint,
            initial_state,
            rewards,
            transition,
        })
    }

    pub fn dims(&self) -> &GameDims {
        &self.dims
    }

    pub fn num_states(&self) -> usize {
        self.dims.num_states
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn leader_actions(&self) -> usize {
        self.dims.leader_actions
    }

    pub fn follower_actions(&self) -> &[usize] {
        &self.dims.follower_actions
    }

    pub fn num_followers(&self) -> usize {
        self.dims.follower_actions.len()
    }

    pub fn joint(&self) -> &JointActions {
        &self.joint
    }

    /// Number of joint follower profiles.
    pub fn num_profiles(&self) -> usize {
        self.joint.total()
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Number of `(x, a, b)` cells at one step.
    pub fn cells_per_step(&self) -> usize {
        self.dims.num_states * self.dims.leader_actions * self.joint.total()
    }

    /// Flat index of `(h, x, a, b)`.
    #[inline]
    pub fn cell(&self, h: usize, x: usize, a: usize, b: usize) -> usize {
        ((h * self.dims.num_states + x) * self.dims.leader_actions + a) * self.joint.total() + b
    }

    /// Flat index of `(x, a, b)` within one step.
    #[inline]
    pub fn step_cell(&self, x: usize, a: usize, b: usize) -> usize {
        (x * self.dims.leader_actions + a) * self.joint.total() + b
    }

    pub fn rewards(&self) -> &RewardTables {
        &self.rewards
    }

    #[inline]
    pub fn leader_reward(&self, h: usize, x: usize, a: usize, b: usize) -> f64 {
        self.rewards.leader[self.cell(h, x, a, b)]
    }

    #[inline]
    pub fn follower_reward(&self, i: usize, h: usize, x: usize, a: usize, b: usize) -> f64 {
        self.rewards.followers[i][self.cell(h, x, a, b)]
    }

    /// Next-state distribution `P_h(. | x, a, b)`.
    #[inline]
    pub fn transition(&self, h: usize, x: usize, a: usize, b: usize) -> &[f64] {
        let s = self.dims.num_states;
        let start = self.cell(h, x, a, b) * s;
        &self.transition[start..start + s]
    }

    pub fn transition_tensor(&self) -> &[f64] {
        &self.transition
    }

    /// `(P_h V)(x, a, b)`.
    #[inline]
    pub fn expect_next(&self, h: usize, x: usize, a: usize, b: usize, values: &[f64]) -> f64 {
        self.transition(h, x, a, b)
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Same dynamics with different reward tensors.
    pub fn with_rewards(&self, rewards: RewardTables) -> Result<Self> {
        Self::new(
            self.dims.clone(),
            self.initial_state,
            rewards,
            self.transition.clone(),
        )
    }

    /// True when `P_h(. | x, a, b)` does not depend on `b` (within `tol`).
    pub fn leader_controller_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        for h in 0..self.horizon() {
            for x in 0..self.num_states() {
                for a in 0..self.leader_actions() {
                    let base = self.transition(h, x, a, 0);
                    for b in 1..self.num_profiles() {
                        let row = self.transition(h, x, a, b);
                        if base.iter().zip(row).any(|(p, q)| (p - q).abs() > tol) {
                            return Some((h, x, a));
                        }
                    }
                }
            }
        }
        None
    }

    pub fn is_leader_controller(&self) -> bool {
        self.leader_controller_violation(1e-12).is_none()
    }

    /// Lists every violated invariant; an empty report means the game is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.initial_state >= self.num_states() {
            violations.push(Violation::Shape(format!(
                "initial state {} outside 0..{}",
                self.initial_state,
                self.num_states()
            )));
        }
        for h in 0..self.horizon() {
            for x in 0..self.num_states() {
                for a in 0..self.leader_actions() {
                    for b in 0..self.num_profiles() {
                        let row = self.transition(h, x, a, b);
                        for (next, &p) in row.iter().enumerate() {
                            if p < -PROB_TOL || !p.is_finite() {
                                violations.push(Violation::NegativeProbability {
                                    h,
                                    x,
                                    a,
                                    b,
                                    next,
                                    p,
                                });
                            }
                        }
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > PROB_TOL || !sum.is_finite() {
                            violations.push(Violation::ProbabilityMass { h, x, a, b, sum });
                        }
                        for player in 0..=self.num_followers() {
                            let value = self.rewards.player(player)[self.cell(h, x, a, b)];
                            if !(-1.0..=1.0).contains(&value) {
                                violations.push(Violation::RewardOutOfRange {
                                    player,
                                    h,
                                    x,
                                    a,
                                    b,
                                    value,
                                });
                            }
                        }
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    fn reward_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.horizon(), self.num_states(), self.leader_actions()];
        dims.extend_from_slice(self.follower_actions());
        dims
    }

    pub fn to_json(&self) -> Value {
        let rdims = self.reward_dims();
        let mut tdims = rdims.clone();
        tdims.push(self.num_states());
        json!({
            "format_version": FORMAT_VERSION,
            "num_states": self.num_states(),
            "horizon": self.horizon(),
            "leader_actions": self.leader_actions(),
            "follower_actions": self.follower_actions(),
            "initial_state": self.initial_state,
            "leader_reward": to_nested(&self.rewards.leader, &rdims),
            "follower_rewards": self
                .rewards
                .followers
                .iter()
                .map(|r| to_nested(r, &rdims))
                .collect::<Vec<_>>(),
            "transition": to_nested(&self.transition, &tdims),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let version = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| SneError::Format("missing format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(SneError::FormatVersion(version));
        }
        let get_usize = |key: &str| -> Result<usize> {
            value
                .get(key)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| SneError::Format(format!("missing integer field {key}")))
        };
        let follower_actions: Vec<usize> = serde_json::from_value(
            value
                .get("follower_actions")
                .cloned()
                .ok_or_else(|| SneError::Format("missing follower_actions".into()))?,
        )?;
        let dims = GameDims {
            num_states: get_usize("num_states")?,
            horizon: get_usize("horizon")?,
            leader_actions: get_usize("leader_actions")?,
            follower_actions,
        };
        dims.check()?;
        let mut rdims = vec![dims.horizon, dims.num_states, dims.leader_actions];
        rdims.extend_from_slice(&dims.follower_actions);
        let mut tdims = rdims.clone();
        tdims.push(dims.num_states);
        let field = |key: &str| {
            value
                .get(key)
                .ok_or_else(|| SneError::Format(format!("missing field {key}")))
        };
        let leader = from_nested(field("leader_reward")?, &rdims)?;
        let followers = field("follower_rewards")?
            .as_array()
            .ok_or_else(|| SneError::Format("follower_rewards must be an array".into()))?
            .iter()
            .map(|v| from_nested(v, &rdims))
            .collect::<Result<Vec<_>>>()?;
        let transition = from_nested(field("transition")?, &tdims)?;
        Self::new(
            dims,
            get_usize("initial_state")?,
            RewardTables { leader, followers },
            transition,
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }
}

/// Nests a flat row-major tensor into JSON arrays of the given shape.
pub fn to_nested(flat: &[f64], dims: &[usize]) -> Value {
    fn rec(flat: &[f64], dims: &[usize]) -> Value {
        if dims.len() == 1 {
            return Value::Array(flat.iter().map(|&v| json!(v)).collect());
        }
        let stride: usize = dims[1..].iter().product();
        Value::Array(
            flat.chunks(stride)
                .take(dims[0])
                .map(|chunk| rec(chunk, &dims[1..]))
                .collect(),
        )
    }
    rec(flat, dims)
}

/// Flattens nested JSON arrays, checking every level against `dims`.
pub fn from_nested(value: &Value, dims: &[usize]) -> Result<Vec<f64>> {
    fn rec(value: &Value, dims: &[usize], out: &mut Vec<f64>) -> Result<()> {
        let arr = value
            .as_array()
            .ok_or_else(|| SneError::Format("expected an array".into()))?;
        if arr.len() != dims[0] {
            return Err(SneError::Shape(format!(
                "array of length {} where {} was expected",
                arr.len(),
                dims[0]
            )));
        }
        if dims.len() == 1 {
            for v in arr {
                out.push(
                    v.as_f64()
                        .ok_or_else(|| SneError::Format("expected a number".into()))?,
                );
            }
        } else {
            for v in arr {
                rec(v, &dims[1..], out)?;
            }
        }
        Ok(())
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    rec(value, dims, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform_two_state() -> TabularGameSpec {
        let dims = GameDims::new(2, 2, vec![2], 2);
        let cells = 2 * 2 * 2 * 2;
        let leader = (0..cells).map(|i| (i as f64 / cells as f64) - 0.5).collect();
        let follower = (0..cells).map(|i| 0.25 - (i % 3) as f64 * 0.25).collect();
        TabularGameSpec::new(
            dims,
            0,
            RewardTables {
                leader,
                followers: vec![follower],
            },
            vec![0.5; cells * 2],
        )
        .unwrap()
    }

    #[test]
    fn uniform_game_is_valid() {
        assert!(uniform_two_state().validate().is_valid());
    }

    #[test]
    fn short_probability_row_is_reported() {
        let g = uniform_two_state();
        let mut t = g.transition_tensor().to_vec();
        t[0] = 0.4;
        let bad = TabularGameSpec::new(g.dims().clone(), 0, g.rewards().clone(), t).unwrap();
        let report = bad.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::ProbabilityMass { h: 0, x: 0, a: 0, b: 0, .. }
        ));
        assert!(report.violations[0].to_string().contains("probability mass"));
    }

    #[test]
    fn reward_above_one_is_reported() {
        let g = uniform_two_state();
        let mut r = g.rewards().clone();
        r.followers[0][5] = 1.5;
        let bad = g.with_rewards(r).unwrap();
        let report = bad.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].to_string().contains("reward out of [-1,1]"));
    }

    #[test]
    fn wrong_lengths_are_rejected() {
        let g = uniform_two_state();
        let err = TabularGameSpec::new(
            g.dims().clone(),
            0,
            g.rewards().clone(),
            vec![0.5; 3],
        );
        assert!(matches!(err, Err(SneError::Shape(_))));
    }

    #[test]
    fn joint_action_codec() {
        let j = JointActions::new(vec![2, 3, 2]);
        assert_eq!(j.total(), 12);
        for idx in 0..12 {
            assert_eq!(j.encode(&j.decode(idx)), idx);
        }
        assert_eq!(j.encode(&[1, 2, 1]), 11);
        assert_eq!(j.deviate(0, 1, 2), j.encode(&[0, 2, 0]));
    }

    #[test]
    fn json_round_trip() {
        let g = uniform_two_state();
        let back = TabularGameSpec::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn json_rejects_other_versions() {
        let mut v = uniform_two_state().to_json();
        v["format_version"] = json!(2);
        assert!(matches!(
            TabularGameSpec::from_json(&v),
            Err(SneError::FormatVersion(2))
        ));
    }
}
