use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sne_core::game::{random_game, random_leader_controller_game, FeatureMode, GameDims, JointPolicy, TabularGameSpec};
use sne_core::online::BonusSpec;
use sne_core::planner::exact_sne;
use sne_core::reward_free::RewardNoise;
use sne_core::stage::TieBreak;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Online,
    Offline,
    RewardFree,
}

impl SuiteKind {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Online => "online",
            SuiteKind::Offline => "offline",
            SuiteKind::RewardFree => "rewardfree",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSizes {
    pub states: usize,
    pub leader_actions: usize,
    pub follower_actions: Vec<usize>,
    pub horizon: usize,
}

/// A fixed spec file, or a random game per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSource {
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[serde(default)]
    pub sizes: Option<GameSizes>,
    #[serde(default)]
    pub leader_controller: bool,
    /// Random games use seed `game_seed_offset + seed`.
    #[serde(default)]
    pub game_seed_offset: u64,
}

/// Behavior policy for offline data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Uniform,
    /// The exact equilibrium policy.
    Equilibrium,
    /// `alpha · equilibrium + (1 − alpha) · uniform` at every state.
    Mixture { alpha: f64 },
}

impl Behavior {
    /// `uniform`, `sne`, or `mixture:<alpha>`.
    pub fn parse(text: &str) -> Result<Self> {
        let b = match text.split_once(':') {
            None if text == "uniform" => Behavior::Uniform,
            None if text == "sne" || text == "equilibrium" => Behavior::Equilibrium,
            Some(("mixture", alpha)) => Behavior::Mixture { alpha: alpha.parse()? },
            _ => bail!("unknown behavior policy {text:?}"),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if let Behavior::Mixture { alpha } = self {
            if !(0.0..=1.0).contains(alpha) {
                bail!("mixture weight {alpha} must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            Behavior::Uniform => "uniform".into(),
            Behavior::Equilibrium => "sne".into(),
            Behavior::Mixture { alpha } => format!("mixture:{alpha}"),
        }
    }

    pub fn policy(&self, spec: &TabularGameSpec, tiebreak: TieBreak) -> Result<JointPolicy> {
        let uniform = JointPolicy::uniform(spec);
        Ok(match *self {
            Behavior::Uniform => uniform,
            Behavior::Equilibrium => exact_sne(spec, tiebreak)?.policy,
            Behavior::Mixture { alpha } => exact_sne(spec, tiebreak)?.policy.mixture(alpha, &uniform),
        })
    }
}

fn default_bonus() -> BonusSpec {
    BonusSpec::theorem(1.0, 0.1)
}

fn default_tiebreak() -> TieBreak {
    TieBreak::Optimistic
}

fn default_mode() -> FeatureMode {
    FeatureMode::Joint
}

fn default_k0() -> usize {
    100
}

/// A seed × K sweep of one experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: SuiteKind,
    pub game: GameSource,
    pub seeds: Vec<u64>,
    /// Episodes (online), dataset sizes (offline) or collection episodes
    /// (reward-free); strictly increasing.
    pub k_grid: Vec<usize>,
    /// β for online runs, β' for offline runs.
    #[serde(default = "default_bonus")]
    pub bonus: BonusSpec,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_tiebreak")]
    pub tiebreak: TieBreak,
    #[serde(default = "default_mode")]
    pub mode: FeatureMode,
    #[serde(default)]
    pub behavior: Behavior,
    /// Visitation-learner episodes per target for reward-free runs.
    #[serde(default = "default_k0")]
    pub k0: usize,
    #[serde(default)]
    pub noise: RewardNoise,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative spec paths are taken relative to the config file.
        if let (Some(spec), Some(dir)) = (config.game.spec.as_mut(), path.parent()) {
            if spec.is_relative() {
                *spec = dir.join(&*spec);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seed list is empty");
        }
        if self.k_grid.is_empty() {
            bail!("K grid is empty");
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) || self.k_grid[0] == 0 {
            bail!("K grid must be positive and strictly increasing, got {:?}", self.k_grid);
        }
        match (&self.game.spec, &self.game.sizes) {
            (Some(path), None) => {
                if !path.is_file() {
                    bail!("spec file {} does not exist", path.display());
                }
            }
            (None, Some(s)) => {
                if s.states == 0 || s.leader_actions == 0 || s.horizon == 0 || s.follower_actions.is_empty() || s.follower_actions.contains(&0) {
                    bail!("game sizes must all be positive");
                }
            }
            _ => bail!("give exactly one of game.spec and game.sizes"),
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                bail!("epsilon {eps} must be positive");
            }
        }
        if self.command == SuiteKind::RewardFree && self.k0 == 0 {
            bail!("k0 must be at least 1");
        }
        self.bonus.validate()?;
        self.tiebreak.validate()?;
        self.behavior.validate()
    }

    /// The game played under `seed`.
    pub fn game_for(&self, seed: u64) -> Result<TabularGameSpec> {
        if let Some(path) = &self.game.spec {
            return Ok(TabularGameSpec::read(path)?);
        }
        let s = self.game.sizes.as_ref().expect("validated sizes");
        let dims = GameDims::new(s.states, s.leader_actions, s.follower_actions.clone(), s.horizon);
        let game_seed = self.game.game_seed_offset.wrapping_add(seed);
        Ok(if self.game.leader_controller {
            random_leader_controller_game(&dims, game_seed)
        } else {
            random_game(&dims, game_seed)
        })
    }
}
