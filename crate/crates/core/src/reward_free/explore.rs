use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SneError};
use crate::game::{GameDims, JointPolicy, PolicyTable, RewardTables, TabularGameSpec};
use crate::rng::{sample_categorical, stream_rng};

const EXPLORE_STREAM: u64 = 1;
const POOL_STREAM: u64 = 2;

/// Name of the visitation learner recorded in exploration outputs.
pub const EXPLORER_NAME: &str = "ucbvi-hoeffding";

/// How rewards are revealed when a cell is played.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardNoise {
    /// The mean reward itself.
    #[default]
    Exact,
    /// `±1` with mean equal to the reward.
    Bernoulli,
}

/// A game whose reward tables are only observable by playing.
#[derive(Clone, Debug)]
pub struct HiddenRewardEnv {
    spec: TabularGameSpec,
    noise: RewardNoise,
}

impl HiddenRewardEnv {
    pub fn new(spec: TabularGameSpec, noise: RewardNoise) -> Self {
        Self { spec, noise }
    }

    pub fn dims(&self) -> &GameDims {
        self.spec.dims()
    }

    pub fn initial_state(&self) -> usize {
        self.spec.initial_state()
    }

    pub fn noise(&self) -> RewardNoise {
        self.noise
    }

    /// Plays `(a, b)` at `(h, x)`: observed rewards (leader first) and the
    /// next state.
    pub fn step<R: Rng + ?Sized>(&self, h: usize, x: usize, a: usize, b: usize, rng: &mut R) -> (Vec<f64>, usize) {
        let mut rewards = Vec::with_capacity(self.spec.num_followers() + 1);
        rewards.push(self.observe(self.spec.leader_reward(h, x, a, b), rng));
        for i in 0..self.spec.num_followers() {
            rewards.push(self.observe(self.spec.follower_reward(i, h, x, a, b), rng));
        }
        (rewards, self.next_state(h, x, a, b, rng))
    }

    /// Samples a transition without revealing rewards.
    pub fn next_state<R: Rng + ?Sized>(&self, h: usize, x: usize, a: usize, b: usize, rng: &mut R) -> usize {
        sample_categorical(self.spec.transition(h, x, a, b), rng)
    }

    fn observe<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match self.noise {
            RewardNoise::Exact => mean,
            RewardNoise::Bernoulli => {
                if rng.random::<f64>() < (1.0 + mean) / 2.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    /// Episodes of the visitation learner per target `(h, x)`.
    pub k0: usize,
    /// Episodes of the pooled reward-collection phase.
    pub k: usize,
    pub seed: u64,
    /// Scale of the `√(log/n)` visitation bonus.
    #[serde(default = "default_bonus")]
    pub bonus_scale: f64,
    /// Confidence level inside the bonus logarithm.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_bonus() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.1
}

impl ExploreConfig {
    pub fn new(k0: usize, k: usize, seed: u64) -> Self {
        Self {
            k0,
            k,
            seed,
            bonus_scale: default_bonus(),
            delta: default_delta(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k0 == 0 || self.k == 0 {
            return Err(SneError::InvalidConfig("K0 and K must both be at least 1".into()));
        }
        if !(self.bonus_scale >= 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SneError::InvalidConfig(format!(
                "bonus scale {} must be ≥ 0 and delta {} in (0,1)",
                self.bonus_scale, self.delta
            )));
        }
        Ok(())
    }
}

/// Empirical mean rewards with visit counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRewards {
    pub dims: GameDims,
    /// Means in `[-1, 1]`; zero on unvisited cells.
    pub rewards: RewardTables,
    /// Visits per cell, flat `[h][x][a][b]`.
    pub counts: Vec<u64>,
    /// `true` where a cell was never visited.
    pub mask: Vec<bool>,
}

impl EmpiricalRewards {
    pub fn num_cells(&self) -> usize {
        self.counts.len()
    }

    pub fn num_unvisited(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn min_visited_count(&self) -> Option<u64> {
        self.counts.iter().copied().filter(|&c| c > 0).min()
    }

    /// Largest reward error over visited cells, all players.
    pub fn max_error(&self, truth: &RewardTables) -> f64 {
        let players = self.rewards.followers.len() + 1;
        let mut worst: f64 = 0.0;
        for p in 0..players {
            for ((est, tru), &m) in self.rewards.player(p).iter().zip(truth.player(p)).zip(&self.mask) {
                if !m {
                    worst = worst.max((est - tru).abs());
                }
            }
        }
        worst
    }

    /// Hoeffding radius `2√(log(2·cells/p) / (2·n_min))` for `±1`
    /// observations, union-bounded over every cell and player.
    pub fn hoeffding_radius(&self, p: f64) -> Option<f64> {
        let n = self.min_visited_count()? as f64;
        let cells = (self.num_cells() * (self.rewards.followers.len() + 1)) as f64;
        Some(2.0 * ((2.0 * cells / p).ln() / (2.0 * n)).sqrt())
    }

    /// The game with its rewards replaced by these estimates.
    pub fn as_game(&self, env: &TabularGameSpec) -> Result<TabularGameSpec> {
        if env.dims() != &self.dims {
            return Err(SneError::ShapeMismatch("reward estimates do not match the game".into()));
        }
        env.with_rewards(self.rewards.clone())
    }
}

/// A pure joint policy produced for one target `(h, x)`, uniform at that
/// target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationPolicy {
    pub target_step: usize,
    pub target_state: usize,
    /// Greedy `(a, b)` pair per `(h, x)`, flat `[h][x]`, encoded `a·|B| + b`.
    pub actions: Vec<usize>,
}

impl ExplorationPolicy {
    fn is_target(&self, h: usize, x: usize) -> bool {
        h == self.target_step && x == self.target_state
    }

    /// Leader and follower marginals; followers get the decoded pure
    /// profile off target and uniform play on target.
    pub fn to_joint_policy(&self, dims: &GameDims) -> JointPolicy {
        let s = dims.num_states;
        let nb: usize = dims.follower_actions.iter().product();
        let joint = crate::game::JointActions::new(dims.follower_actions.clone());
        let mut leader = PolicyTable::uniform(dims.horizon, s, dims.leader_actions);
        let mut followers: Vec<PolicyTable> = dims
            .follower_actions
            .iter()
            .map(|&n| PolicyTable::uniform(dims.horizon, s, n))
            .collect();
        for h in 0..dims.horizon {
            for x in 0..s {
                if self.is_target(h, x) {
                    continue;
                }
                let j = self.actions[h * s + x];
                leader.set_pure(h, x, j / nb);
                for (i, &bi) in joint.decode(j % nb).iter().enumerate() {
                    followers[i].set_pure(h, x, bi);
                }
            }
        }
        JointPolicy { leader, followers }
    }
}

/// Pooled exploration policies, `k0` per target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPolicySet {
    pub explorer: String,
    pub policies: Vec<ExplorationPolicy>,
}

impl ExplorationPolicySet {
    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn joint_policies<'a>(&'a self, dims: &'a GameDims) -> impl Iterator<Item = JointPolicy> + 'a {
        self.policies.iter().map(move |p| p.to_joint_policy(dims))
    }
}

/// Index of the largest optimistic value; capped ties go to the larger
/// uncapped value, then the lowest index.
fn argmax(values: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.0 > values[best].0 || (v.0 == values[best].0 && v.1 > values[best].1) {
            best = i;
        }
    }
    best
}

/// Optimistic tabular learner maximizing the probability of reaching
/// `(target_step, target_state)`; returns the greedy policy of every
/// episode.
fn visit_target(
    env: &HiddenRewardEnv,
    target_step: usize,
    target_state: usize,
    config: &ExploreConfig,
    index: u64,
) -> Vec<ExplorationPolicy> {
    let dims = env.dims();
    let s = dims.num_states;
    let nb: usize = dims.follower_actions.iter().product();
    let nj = dims.leader_actions * nb;
    let log = (2.0 * (s * nj * dims.horizon * config.k0) as f64 / config.delta).ln();
    let mut visits = vec![0u64; target_step * s * nj];
    let mut moves = vec![0u64; target_step * s * nj * s];
    let mut rng = stream_rng(config.seed, EXPLORE_STREAM, index);
    let mut out = Vec::with_capacity(config.k0);
    for _ in 0..config.k0 {
        let mut actions = vec![0usize; dims.horizon * s];
        let mut v: Vec<f64> = (0..s).map(|x| (x == target_state) as u8 as f64).collect();
        for h in (0..target_step).rev() {
            let mut next_v = vec![0.0; s];
            for x in 0..s {
                let q: Vec<(f64, f64)> = (0..nj)
                    .map(|j| {
                        let cell = (h * s + x) * nj + j;
                        let n = visits[cell];
                        if n == 0 {
                            return (1.0, f64::INFINITY);
                        }
                        let row = &moves[cell * s..(cell + 1) * s];
                        let mean: f64 = row.iter().zip(&v).map(|(&c, vv)| c as f64 * vv).sum::<f64>() / n as f64;
                        let raw = mean + config.bonus_scale * (log / n as f64).sqrt();
                        (raw.min(1.0), raw)
                    })
                    .collect();
                let j = argmax(&q);
                actions[h * s + x] = j;
                next_v[x] = q[j].0;
            }
            v = next_v;
        }
        let policy = ExplorationPolicy {
            target_step,
            target_state,
            actions,
        };
        let mut x = env.initial_state();
        for h in 0..target_step {
            let j = policy.actions[h * s + x];
            let next = env.next_state(h, x, j / nb, j % nb, &mut rng);
            let cell = (h * s + x) * nj + j;
            visits[cell] += 1;
            moves[cell * s + next] += 1;
            x = next;
        }
        out.push(policy);
    }
    out
}

/// Builds a visitation policy batch for every `(h, x)`, then collects
/// rewards for `k` episodes under policies drawn uniformly from the pool.
pub fn reward_free_explore(
    env: &HiddenRewardEnv,
    config: &ExploreConfig,
) -> Result<(EmpiricalRewards, ExplorationPolicySet)> {
    config.validate()?;
    let dims = env.dims().clone();
    let s = dims.num_states;
    let nb: usize = dims.follower_actions.iter().product();
    let mut pool = Vec::with_capacity(dims.horizon * s * config.k0);
    for h in 0..dims.horizon {
        for x in 0..s {
            pool.extend(visit_target(env, h, x, config, (h * s + x) as u64));
        }
    }
    let set = ExplorationPolicySet {
        explorer: EXPLORER_NAME.into(),
        policies: pool,
    };

    let players = dims.follower_actions.len() + 1;
    let cells = dims.horizon * s * dims.leader_actions * nb;
    let mut sums = vec![vec![0.0; cells]; players];
    let mut counts = vec![0u64; cells];
    let mut rng = stream_rng(config.seed, POOL_STREAM, 0);
    let marginals: Vec<JointPolicy> = set.joint_policies(&dims).collect();
    let joint = crate::game::JointActions::new(dims.follower_actions.clone());
    for _ in 0..config.k {
        let policy = &marginals[rng.random_range(0..marginals.len())];
        let mut x = env.initial_state();
        for h in 0..dims.horizon {
            let a = sample_categorical(policy.leader.dist(h, x), &mut rng);
            let bs: Vec<usize> = policy
                .followers
                .iter()
                .map(|f| sample_categorical(f.dist(h, x), &mut rng))
                .collect();
            let b = joint.encode(&bs);
            let (observed, next) = env.step(h, x, a, b, &mut rng);
            let cell = ((h * s + x) * dims.leader_actions + a) * nb + b;
            counts[cell] += 1;
            for (p, r) in observed.into_iter().enumerate() {
                sums[p][cell] += r;
            }
            x = next;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .iter()
        .map(|col| {
            col.iter()
                .zip(&counts)
                .map(|(&t, &n)| if n == 0 { 0.0 } else { (t / n as f64).clamp(-1.0, 1.0) })
                .collect()
        })
        .collect();
    let mut means = means.into_iter();
    let leader = means.next().expect("leader column");
    let rewards = RewardTables {
        leader,
        followers: means.collect(),
    };
    Ok((
        EmpiricalRewards {
            dims,
            rewards,
            mask: counts.iter().map(|&n| n == 0).collect(),
            counts,
        },
        set,
    ))
}
