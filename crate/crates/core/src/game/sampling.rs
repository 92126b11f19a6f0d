use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::JointPolicy;
use super::spec::{TabularGameSpec, FORMAT_VERSION};
use crate::error::{Result, SneError};
use crate::rng::{episode_rng, sample_categorical};

/// One realized step of an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub leader_action: usize,
    pub follower_actions: Vec<usize>,
    pub joint_action: usize,
    /// Leader reward first, then one entry per follower.
    pub rewards: Vec<f64>,
    pub next_state: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn leader_return(&self) -> f64 {
        self.steps.iter().map(|s| s.rewards[0]).sum()
    }
}

/// Draws the actions of every player at `(h, x)`.
pub fn sample_actions<R: Rng + ?Sized>(
    spec: &TabularGameSpec,
    policy: &JointPolicy,
    h: usize,
    x: usize,
    rng: &mut R,
) -> (usize, Vec<usize>, usize) {
    let a = sample_categorical(policy.leader.dist(h, x), rng);
    let b: Vec<usize> = policy
        .followers
        .iter()
        .map(|f| sample_categorical(f.dist(h, x), rng))
        .collect();
    let joint = spec.joint().encode(&b);
    (a, b, joint)
}

/// Plays one episode from the initial state.
pub fn sample_episode<R: Rng + ?Sized>(
    spec: &TabularGameSpec,
    policy: &JointPolicy,
    rng: &mut R,
) -> Trajectory {
    let mut x = spec.initial_state();
    let mut steps = Vec::with_capacity(spec.horizon());
    for h in 0..spec.horizon() {
        let (a, b, joint) = sample_actions(spec, policy, h, x, rng);
        let mut rewards = Vec::with_capacity(spec.num_followers() + 1);
        rewards.push(spec.leader_reward(h, x, a, joint));
        for i in 0..spec.num_followers() {
            rewards.push(spec.follower_reward(i, h, x, a, joint));
        }
        let next = sample_categorical(spec.transition(h, x, a, joint), rng);
        steps.push(Step {
            state: x,
            leader_action: a,
            follower_actions: b,
            joint_action: joint,
            rewards,
            next_state: next,
        });
        x = next;
    }
    Trajectory { steps }
}

/// A logged transition `(x_h, a_h, b_h, x_{h+1})` of an offline dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedStep {
    pub x: usize,
    pub a: usize,
    pub b: Vec<usize>,
    pub x_next: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct DatasetHeader {
    format_version: u64,
    seed: u64,
    behavior: String,
    num_episodes: usize,
    horizon: usize,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    episode: usize,
    h: usize,
    x: usize,
    a: usize,
    b: Vec<usize>,
    x_next: usize,
}

/// `K` logged episodes of exactly `H` steps each, plus how they were made.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OfflineDataset {
    pub seed: u64,
    pub behavior: String,
    pub horizon: usize,
    pub episodes: Vec<Vec<LoggedStep>>,
}

impl OfflineDataset {
    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// JSON-lines: a header record, then one record per step.
    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DatasetHeader {
            format_version: FORMAT_VERSION,
            seed: self.seed,
            behavior: self.behavior.clone(),
            num_episodes: self.episodes.len(),
            horizon: self.horizon,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (episode, steps) in self.episodes.iter().enumerate() {
            for (h, s) in steps.iter().enumerate() {
                let rec = StepRecord {
                    episode,
                    h,
                    x: s.x,
                    a: s.a,
                    b: s.b.clone(),
                    x_next: s.x_next,
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| SneError::Format("dataset has no header".into()))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)?;
        if header.format_version != FORMAT_VERSION {
            return Err(SneError::FormatVersion(header.format_version));
        }
        let mut episodes: Vec<Vec<LoggedStep>> = vec![Vec::new(); header.num_episodes];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: StepRecord = serde_json::from_str(&line)?;
            let ep = episodes.get_mut(rec.episode).ok_or_else(|| {
                SneError::Format(format!("episode {} beyond declared count", rec.episode))
            })?;
            if rec.h != ep.len() {
                return Err(SneError::Format(format!(
                    "episode {} step {} out of order",
                    rec.episode, rec.h
                )));
            }
            ep.push(LoggedStep {
                x: rec.x,
                a: rec.a,
                b: rec.b,
                x_next: rec.x_next,
            });
        }
        if let Some(k) = episodes.iter().position(|e| e.len() != header.horizon) {
            return Err(SneError::Format(format!(
                "episode {k} has {} steps, expected {}",
                episodes[k].len(),
                header.horizon
            )));
        }
        Ok(Self {
            seed: header.seed,
            behavior: header.behavior,
            horizon: header.horizon,
            episodes,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.to_writer(&mut out).expect("writing to memory cannot fail");
        out
    }

    /// Checks that every step fits the game's shapes.
    pub fn check_shape(&self, spec: &TabularGameSpec) -> Result<()> {
        if self.horizon != spec.horizon() {
            return Err(SneError::ShapeMismatch(format!(
                "dataset horizon {} vs game horizon {}",
                self.horizon,
                spec.horizon()
            )));
        }
        for steps in &self.episodes {
            for s in steps {
                let ok = s.x < spec.num_states()
                    && s.x_next < spec.num_states()
                    && s.a < spec.leader_actions()
                    && s.b.len() == spec.num_followers()
                    && s.b.iter().zip(spec.follower_actions()).all(|(b, n)| b < n);
                if !ok {
                    return Err(SneError::ShapeMismatch(format!(
                        "logged step {s:?} does not fit the game"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rolls out `num_episodes` independent episodes of `behavior`; episode `k`
/// uses the substream for index `k`.
pub fn generate_dataset(
    spec: &TabularGameSpec,
    behavior: &JointPolicy,
    description: &str,
    num_episodes: usize,
    seed: u64,
) -> OfflineDataset {
    let episodes = (0..num_episodes)
        .map(|k| {
            let mut rng = episode_rng(seed, k as u64);
            sample_episode(spec, behavior, &mut rng)
                .steps
                .into_iter()
                .map(|s| LoggedStep {
                    x: s.state,
                    a: s.leader_action,
                    b: s.follower_actions,
                    x_next: s.next_state,
                })
                .collect()
        })
        .collect();
    OfflineDataset {
        seed,
        behavior: description.to_string(),
        horizon: spec.horizon(),
        episodes,
    }
}

/// Re-derives every episode from the recorded seed and reports the indices
/// that differ from the stored data.
pub fn audit_compliance(
    spec: &TabularGameSpec,
    behavior: &JointPolicy,
    dataset: &OfflineDataset,
) -> Vec<usize> {
    let replay = generate_dataset(
        spec,
        behavior,
        &dataset.behavior,
        dataset.num_episodes(),
        dataset.seed,
    );
    replay
        .episodes
        .iter()
        .zip(&dataset.episodes)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(k, _)| k)
        .collect()
}
