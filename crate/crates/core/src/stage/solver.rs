use serde::{Deserialize, Serialize};

use super::lp::{leader_lp_with_rhs, LP_TOL};
use crate::error::{Result, SneError};
use crate::game::JointActions;

/// A follower is a best responder if no pure deviation gains more than this.
pub const BR_TOL: f64 = 1e-9;
/// Smallest admissible certificate entry.
pub const CERT_TOL: f64 = 1e-7;
/// Follower payoff columns closer than this everywhere count as identical.
const SAME_COLUMN_TOL: f64 = 1e-12;
/// Leader values closer than this are treated as ties.
const VALUE_TIE_TOL: f64 = 1e-9;

/// How ties among follower best responses are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TieBreak {
    /// Followers break ties in favor of the leader.
    Optimistic,
    /// Followers break ties against the leader. The commitment LP asks for
    /// a strict preference of `strict_margin`.
    Pessimistic { strict_margin: f64 },
}

impl TieBreak {
    pub const DEFAULT_MARGIN: f64 = 1e-6;

    pub fn pessimistic() -> Self {
        TieBreak::Pessimistic {
            strict_margin: Self::DEFAULT_MARGIN,
        }
    }

    pub fn is_pessimistic(&self) -> bool {
        matches!(self, TieBreak::Pessimistic { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if let TieBreak::Pessimistic { strict_margin } = *self {
            if !(strict_margin > 0.0 && strict_margin <= 0.1) {
                return Err(SneError::InvalidConfig(format!(
                    "strict margin {strict_margin} outside (0, 0.1]"
                )));
            }
        }
        Ok(())
    }

    /// `"optimistic"` or `"pessimistic"`.
    pub fn name(&self) -> &'static str {
        match self {
            TieBreak::Optimistic => "optimistic",
            TieBreak::Pessimistic { .. } => "pessimistic",
        }
    }
}

/// One-shot leader-follower game; payoffs are flat `[a][b]` with `b` the
/// joint follower index.
#[derive(Clone, Debug, PartialEq)]
pub struct StageGame {
    leader_actions: usize,
    joint: JointActions,
    leader: Vec<f64>,
    followers: Vec<Vec<f64>>,
}

impl StageGame {
    pub fn new(
        leader_actions: usize,
        follower_actions: Vec<usize>,
        leader: Vec<f64>,
        followers: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if leader_actions == 0 || follower_actions.is_empty() || follower_actions.contains(&0) {
            return Err(SneError::Shape("stage game needs positive action counts".into()));
        }
        let joint = JointActions::new(follower_actions);
        let cells = leader_actions * joint.total();
        if leader.len() != cells
            || followers.len() != joint.num_followers()
            || followers.iter().any(|f| f.len() != cells)
        {
            return Err(SneError::Shape(format!(
                "stage payoffs do not match {leader_actions} x {:?}",
                joint.sizes()
            )));
        }
        if leader.iter().chain(followers.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(SneError::Shape("stage payoffs must be finite".into()));
        }
        Ok(Self {
            leader_actions,
            joint,
            leader,
            followers,
        })
    }

    pub fn leader_actions(&self) -> usize {
        self.leader_actions
    }

    pub fn joint(&self) -> &JointActions {
        &self.joint
    }

    pub fn num_profiles(&self) -> usize {
        self.joint.total()
    }

    pub fn leader_payoff(&self, a: usize, b: usize) -> f64 {
        self.leader[a * self.joint.total() + b]
    }

    pub fn follower_payoff(&self, i: usize, a: usize, b: usize) -> f64 {
        self.followers[i][a * self.joint.total() + b]
    }

    pub fn leader_table(&self) -> &[f64] {
        &self.leader
    }

    pub fn follower_tables(&self) -> &[Vec<f64>] {
        &self.followers
    }

    /// `Σ_a π(a) L(a, b)`.
    pub fn leader_value(&self, mixed: &[f64], b: usize) -> f64 {
        expected(&self.leader, self.joint.total(), mixed, b)
    }

    /// Per-follower `−max_{b_i'} [u_i(b_i', b_{−i}) − u_i(b)]` under `mixed`.
    pub fn certificate(&self, mixed: &[f64], b: usize) -> Vec<f64> {
        let nb = self.joint.total();
        (0..self.joint.num_followers())
            .map(|i| {
                let own = expected(&self.followers[i], nb, mixed, b);
                let best = (0..self.joint.sizes()[i])
                    .map(|d| expected(&self.followers[i], nb, mixed, self.joint.deviate(b, i, d)))
                    .fold(f64::NEG_INFINITY, f64::max);
                own - best
            })
            .collect()
    }
}

fn expected(table: &[f64], nb: usize, mixed: &[f64], b: usize) -> f64 {
    mixed.iter().enumerate().map(|(a, p)| p * table[a * nb + b]).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSolution {
    pub leader_mixed: Vec<f64>,
    /// Joint follower profile index.
    pub follower_profile: usize,
    pub follower_actions: Vec<usize>,
    pub leader_value: f64,
    pub tiebreak: TieBreak,
    /// Per follower, minus the largest gain from a unilateral deviation.
    pub certificate: Vec<f64>,
}

impl StageSolution {
    pub fn worst_certificate(&self) -> f64 {
        self.certificate.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Pure profiles where no follower gains more than [`BR_TOL`] by deviating
/// under the leader's mixed strategy.
pub fn follower_pure_nash_set(
    joint: &JointActions,
    followers: &[Vec<f64>],
    leader_mixed: &[f64],
) -> Vec<usize> {
    let nb = joint.total();
    let payoffs: Vec<Vec<f64>> = followers
        .iter()
        .map(|f| (0..nb).map(|b| expected(f, nb, leader_mixed, b)).collect())
        .collect();
    (0..nb)
        .filter(|&b| {
            (0..joint.num_followers()).all(|i| {
                let own = payoffs[i][b];
                (0..joint.sizes()[i]).all(|d| payoffs[i][joint.deviate(b, i, d)] <= own + BR_TOL)
            })
        })
        .collect()
}

/// Deviation rows `F_i(·, b) − F_i(·, b')` and their right-hand sides.
fn deviation_constraints(game: &StageGame, b: usize, margin: f64) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let al = game.leader_actions;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..game.joint.num_followers() {
        let own = game.joint.decode(b)[i];
        for d in 0..game.joint.sizes()[i] {
            if d == own {
                continue;
            }
            let dev = game.joint.deviate(b, i, d);
            let row: Vec<f64> = (0..al)
                .map(|a| game.follower_payoff(i, a, b) - game.follower_payoff(i, a, dev))
                .collect();
            let identical = row.iter().all(|v| v.abs() <= SAME_COLUMN_TOL);
            let need = if identical { 0.0 } else { margin };
            if row.iter().all(|&v| v >= need) {
                continue;
            }
            if row.iter().all(|&v| v < need - LP_TOL) {
                return None;
            }
            rows.push(row);
            rhs.push(need);
        }
    }
    Some((rows, rhs))
}

/// Best commitment inducing profile `b`, if any.
fn induce(game: &StageGame, b: usize, margin: f64) -> Option<(Vec<f64>, f64)> {
    let (rows, rhs) = deviation_constraints(game, b, margin)?;
    let objective: Vec<f64> = (0..game.leader_actions).map(|a| game.leader_payoff(a, b)).collect();
    leader_lp_with_rhs(&objective, &rows, &rhs)
        .ok()
        .map(|s| (s.strategy, s.value))
}

/// Profile minimizing the leader's value among `candidates`, ties to the
/// lowest index.
fn worst_for_leader(game: &StageGame, mixed: &[f64], candidates: &[usize]) -> Option<(usize, f64)> {
    select(candidates.iter().map(|&b| (b, game.leader_value(mixed, b))), false)
}

/// Picks the max (or min) value with lowest-index tie breaking.
fn select(items: impl Iterator<Item = (usize, f64)>, maximize: bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (b, v) in items {
        let better = match best {
            None => true,
            Some((_, cur)) => {
                if maximize {
                    v > cur + VALUE_TIE_TOL
                } else {
                    v < cur - VALUE_TIE_TOL
                }
            }
        };
        if better {
            best = Some((b, v));
        }
    }
    best
}

/// Stackelberg-Nash equilibrium of a stage game over pure follower profiles.
pub fn solve_stage_sne(game: &StageGame, tiebreak: TieBreak) -> Result<StageSolution> {
    tiebreak.validate()?;
    let nb = game.num_profiles();
    let (mixed, profile, value) = match tiebreak {
        TieBreak::Optimistic => {
            let mut best: Option<(Vec<f64>, usize, f64)> = None;
            for b in 0..nb {
                if let Some((pi, v)) = induce(game, b, 0.0) {
                    if best.as_ref().is_none_or(|(_, _, cur)| v > cur + VALUE_TIE_TOL) {
                        best = Some((pi, b, v));
                    }
                }
            }
            best.ok_or(SneError::NoPureProfile)?
        }
        TieBreak::Pessimistic { strict_margin } => {
            let mut found = None;
            for margin in [strict_margin, 0.0] {
                let mut best: Option<(Vec<f64>, usize, f64)> = None;
                for b in 0..nb {
                    let Some((pi, _)) = induce(game, b, margin) else {
                        continue;
                    };
                    let responses = follower_pure_nash_set(&game.joint, &game.followers, &pi);
                    let Some((worst, v)) = worst_for_leader(game, &pi, &responses) else {
                        continue;
                    };
                    if best.as_ref().is_none_or(|(_, _, cur)| v > cur + VALUE_TIE_TOL) {
                        best = Some((pi, worst, v));
                    }
                }
                if best.is_some() {
                    found = best;
                    break;
                }
            }
            found.ok_or(SneError::NoPureProfile)?
        }
    };
    let certificate = game.certificate(&mixed, profile);
    Ok(StageSolution {
        follower_actions: game.joint.decode(profile),
        leader_mixed: mixed,
        follower_profile: profile,
        leader_value: value,
        tiebreak,
        certificate,
    })
}

/// Follower response to a fixed leader mix under the given tie-break, judged
/// by `leader_payoff` (flat `[a][b]`).
pub fn respond(
    joint: &JointActions,
    followers: &[Vec<f64>],
    leader_payoff: &[f64],
    leader_mixed: &[f64],
    tiebreak: TieBreak,
) -> Result<usize> {
    let nb = joint.total();
    let set = follower_pure_nash_set(joint, followers, leader_mixed);
    let items = set.iter().map(|&b| (b, expected(leader_payoff, nb, leader_mixed, b)));
    select(items, !tiebreak.is_pessimistic())
        .map(|(b, _)| b)
        .ok_or(SneError::NoPureProfile)
}

/// Rounds every entry to the nearest multiple of `eps`, halves rounding up.
pub fn quantize(values: &[f64], eps: f64) -> Vec<f64> {
    values.iter().map(|&v| quantize_value(v, eps)).collect()
}

#[inline]
pub fn quantize_value(v: f64, eps: f64) -> f64 {
    debug_assert!(eps > 0.0);
    (v / eps + 0.5).floor() * eps
}

/// Lattice points above which [`grid_oracle`] refuses to run.
pub const GRID_LIMIT: u128 = 10_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Brute-force commitment search over a simplex lattice for single-follower
/// games with at most four leader actions.
pub fn grid_oracle(game: &StageGame, tiebreak: TieBreak, resolution: f64) -> Result<StageSolution> {
    if game.joint.num_followers() != 1 {
        return Err(SneError::MultiFollower(game.joint.num_followers()));
    }
    if game.leader_actions > 4 {
        return Err(SneError::InvalidConfig(format!(
            "grid oracle supports at most 4 leader actions, got {}",
            game.leader_actions
        )));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(SneError::InvalidConfig(format!("resolution {resolution} outside (0, 1]")));
    }
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let al = game.leader_actions;
    let points = binomial((steps + al - 1) as u128, (al - 1) as u128);
    if points > GRID_LIMIT {
        return Err(SneError::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let nb = game.num_profiles();
    let mut best: Option<(Vec<f64>, usize, f64)> = None;
    let mut counts = vec![0usize; al];
    let mut visit = |counts: &[usize]| {
        let pi: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        let payoff: Vec<f64> = (0..nb).map(|b| expected(&game.followers[0], nb, &pi, b)).collect();
        let top = payoff.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let responses = (0..nb)
            .filter(|&b| payoff[b] >= top - BR_TOL)
            .map(|b| (b, game.leader_value(&pi, b)));
        let (b, v) = select(responses, !tiebreak.is_pessimistic()).expect("nonempty response set");
        if best.as_ref().is_none_or(|(_, _, cur)| v > *cur) {
            best = Some((pi, b, v));
        }
    };
    fn compositions(i: usize, left: usize, counts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if i + 1 == counts.len() {
            counts[i] = left;
            f(counts);
            return;
        }
        for k in (0..=left).rev() {
            counts[i] = k;
            compositions(i + 1, left - k, counts, f);
        }
    }
    compositions(0, steps, &mut counts, &mut visit);
    let (mixed, profile, value) = best.expect("lattice is nonempty");
    Ok(StageSolution {
        certificate: game.certificate(&mixed, profile),
        follower_actions: vec![profile],
        leader_mixed: mixed,
        follower_profile: profile,
        leader_value: value,
        tiebreak,
    })
}

/// Input document of the `stage` command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRequest {
    /// `[a][b]` with `b` the joint follower index.
    pub leader: Vec<Vec<f64>>,
    /// One `[a][b]` table per follower.
    pub followers: Vec<Vec<Vec<f64>>>,
    /// Needed only with several followers; defaults to one follower.
    #[serde(default)]
    pub follower_actions: Option<Vec<usize>>,
    #[serde(default = "default_tiebreak")]
    pub tiebreak: TieBreak,
    /// Quantization step applied to the leader payoff before solving.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn default_tiebreak() -> TieBreak {
    TieBreak::Optimistic
}

impl StageRequest {
    pub fn to_game(&self) -> Result<StageGame> {
        let al = self.leader.len();
        let nb = self.leader.first().map_or(0, Vec::len);
        let sizes = self.follower_actions.clone().unwrap_or_else(|| vec![nb]);
        let mut leader: Vec<f64> = self.leader.iter().flatten().copied().collect();
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(SneError::InvalidConfig(format!("epsilon {eps} must be positive")));
            }
            leader = quantize(&leader, eps);
        }
        let followers = self
            .followers
            .iter()
            .map(|f| f.iter().flatten().copied().collect())
            .collect();
        if self.leader.iter().any(|r| r.len() != nb) {
            return Err(SneError::Shape("leader payoff rows differ in length".into()));
        }
        StageGame::new(al, sizes, leader, followers)
    }

    pub fn solve(&self) -> Result<StageSolution> {
        solve_stage_sne(&self.to_game()?, self.tiebreak)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::master_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn single(al: usize, af: usize, l: Vec<f64>, f: Vec<f64>) -> StageGame {
        StageGame::new(al, vec![af], l, vec![f]).unwrap()
    }

    fn random_single<R: Rng>(al: usize, af: usize, rng: &mut R) -> StageGame {
        let l = (0..al * af).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = (0..al * af).map(|_| rng.random_range(-1.0..1.0)).collect();
        single(al, af, l, f)
    }

    #[test]
    fn all_ties_split_by_tiebreak() {
        let g = single(1, 2, vec![5.0, -5.0], vec![0.0, 0.0]);
        let opt = solve_stage_sne(&g, TieBreak::Optimistic).unwrap();
        assert_eq!(opt.follower_profile, 0);
        assert_eq!(opt.leader_value, 5.0);
        let pes = solve_stage_sne(&g, TieBreak::pessimistic()).unwrap();
        assert_eq!(pes.follower_profile, 1);
        assert_eq!(pes.leader_value, -5.0);
    }

    #[test]
    fn dominant_response_is_played() {
        let g = single(1, 3, vec![0.1, 0.2, 0.3], vec![0.0, 1.0, 0.5]);
        for tb in [TieBreak::Optimistic, TieBreak::pessimistic()] {
            let s = solve_stage_sne(&g, tb).unwrap();
            assert_eq!(s.follower_profile, 1);
            assert!((s.leader_value - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn commitment_beats_pure_play() {
        // Classic example where mixing strictly helps the leader.
        let l = vec![1.0, 2.0, 0.0, 3.0];
        let f = vec![0.0, 1.0, 1.0, 0.0];
        let g = single(2, 2, l, f);
        let s = solve_stage_sne(&g, TieBreak::Optimistic).unwrap();
        assert!((s.leader_value - 2.5).abs() < 1e-9);
        assert!((s.leader_mixed[0] - 0.5).abs() < 1e-9);
        assert!(s.worst_certificate() >= -CERT_TOL);
    }

    #[test]
    fn coordination_game_has_diagonal_equilibria() {
        let joint = JointActions::new(vec![2, 2]);
        let f: Vec<f64> = (0..4)
            .map(|b| {
                let d = joint.decode(b);
                if d[0] == d[1] { 1.0 } else { 0.0 }
            })
            .collect();
        let set = follower_pure_nash_set(&joint, &[f.clone(), f], &[1.0]);
        assert_eq!(set, vec![joint.encode(&[0, 0]), joint.encode(&[1, 1])]);
    }

    #[test]
    fn matching_pennies_has_no_pure_equilibrium() {
        let joint = JointActions::new(vec![2, 2]);
        let f1: Vec<f64> = (0..4)
            .map(|b| {
                let d = joint.decode(b);
                if d[0] == d[1] { 1.0 } else { -1.0 }
            })
            .collect();
        let f2: Vec<f64> = f1.iter().map(|v| -v).collect();
        assert!(follower_pure_nash_set(&joint, &[f1.clone(), f2.clone()], &[1.0]).is_empty());
        let g = StageGame::new(1, vec![2, 2], vec![0.0; 4], vec![f1, f2]).unwrap();
        assert!(matches!(
            solve_stage_sne(&g, TieBreak::Optimistic),
            Err(SneError::NoPureProfile)
        ));
    }

    /// Independent check of the pure Nash set by brute force over every
    /// profile and every alternative profile differing in one coordinate.
    fn brute_nash(sizes: &[usize], followers: &[Vec<f64>], mixed: &[f64]) -> Vec<usize> {
        let nb: usize = sizes.iter().product();
        let decode = |mut b: usize| {
            let mut out = vec![0; sizes.len()];
            for i in (0..sizes.len()).rev() {
                out[i] = b % sizes[i];
                b /= sizes[i];
            }
            out
        };
        let pay = |i: usize, b: usize| -> f64 {
            mixed.iter().enumerate().map(|(a, p)| p * followers[i][a * nb + b]).sum()
        };
        (0..nb)
            .filter(|&b| {
                let db = decode(b);
                (0..nb).all(|c| {
                    let dc = decode(c);
                    let diff: Vec<usize> = (0..sizes.len()).filter(|&i| db[i] != dc[i]).collect();
                    diff.len() != 1 || pay(diff[0], c) <= pay(diff[0], b) + BR_TOL
                })
            })
            .collect()
    }

    #[test]
    fn nash_set_matches_brute_force() {
        let mut rng = master_rng(3);
        let joint = JointActions::new(vec![2, 2]);
        for _ in 0..200 {
            let followers: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let p: f64 = rng.random();
            let mixed = [p, 1.0 - p];
            assert_eq!(
                follower_pure_nash_set(&joint, &followers, &mixed),
                brute_nash(&[2, 2], &followers, &mixed)
            );
        }
    }

    #[test]
    fn quantize_rounds_half_up() {
        assert!((quantize_value(0.26, 0.1) - 0.3).abs() < 1e-12);
        assert!((quantize_value(0.25, 0.5) - 0.5).abs() < 1e-12);
        assert!((quantize_value(-0.25, 0.5) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn grid_oracle_finds_dominant_action() {
        let g = single(3, 2, vec![1.0, 1.0, 0.0, 0.0, -1.0, -1.0], vec![0.3, 0.1, 0.5, 0.9, 0.0, 0.2]);
        let s = grid_oracle(&g, TieBreak::Optimistic, 0.01).unwrap();
        assert_eq!(s.leader_mixed, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn grid_oracle_single_action() {
        let g = single(1, 3, vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 1.0]);
        let s = grid_oracle(&g, TieBreak::Optimistic, 0.37).unwrap();
        assert_eq!(s.leader_mixed, vec![1.0]);
        assert_eq!(s.leader_value, 2.0);
    }

    #[test]
    fn grid_oracle_guards_size() {
        let mut rng = master_rng(1);
        let g = random_single(4, 2, &mut rng);
        assert!(matches!(
            grid_oracle(&g, TieBreak::Optimistic, 1e-3),
            Err(SneError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn optimistic_matches_grid_on_two_by_two() {
        let mut rng = master_rng(17);
        for _ in 0..100 {
            let g = random_single(2, 2, &mut rng);
            let lp = solve_stage_sne(&g, TieBreak::Optimistic).unwrap();
            let grid = grid_oracle(&g, TieBreak::Optimistic, 0.001).unwrap();
            let range = g.leader_table().iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - g.leader_table().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(lp.leader_value >= grid.leader_value - 1e-9);
            assert!(lp.leader_value - grid.leader_value <= 0.001 * range.max(1.0) * 2.0 + 1e-9);
        }
    }

    #[test]
    fn request_round_trip() {
        let text = r#"{"leader": [[5, -5]], "followers": [[[0, 0]]], "tiebreak": {"kind": "pessimistic", "strict_margin": 1e-6}}"#;
        let req: StageRequest = serde_json::from_str(text).unwrap();
        let s = req.solve().unwrap();
        assert_eq!(s.leader_value, -5.0);
        let text = r#"{"leader": [[0.26, 0.1]], "followers": [[[1, 0]]], "epsilon": 0.1}"#;
        let req: StageRequest = serde_json::from_str(text).unwrap();
        assert!((req.solve().unwrap().leader_value - 0.3).abs() < 1e-12);
    }

    fn game_strategy() -> impl Strategy<Value = StageGame> {
        (1usize..4, 1usize..4).prop_flat_map(|(al, af)| {
            (
                prop::collection::vec(-1.0f64..1.0, al * af),
                prop::collection::vec(-1.0f64..1.0, al * af),
            )
                .prop_map(move |(l, f)| single(al, af, l, f))
        })
    }

    proptest! {
        #[test]
        fn optimistic_certificate_and_commitment(g in game_strategy()) {
            let s = solve_stage_sne(&g, TieBreak::Optimistic).unwrap();
            prop_assert!(s.worst_certificate() >= -CERT_TOL);
            prop_assert!((s.leader_mixed.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for a in 0..g.leader_actions() {
                let mut pure = vec![0.0; g.leader_actions()];
                pure[a] = 1.0;
                let b = respond(g.joint(), g.follower_tables(), g.leader_table(), &pure, TieBreak::Optimistic).unwrap();
                prop_assert!(s.leader_value >= g.leader_value(&pure, b) - 1e-9);
            }
        }

        #[test]
        fn pessimistic_never_beats_optimistic(g in game_strategy()) {
            let o = solve_stage_sne(&g, TieBreak::Optimistic).unwrap();
            let p = solve_stage_sne(&g, TieBreak::pessimistic()).unwrap();
            prop_assert!(p.leader_value <= o.leader_value + 1e-9);
            prop_assert!(p.worst_certificate() >= -CERT_TOL);
            let set = follower_pure_nash_set(g.joint(), g.follower_tables(), &p.leader_mixed);
            for b in set {
                prop_assert!(g.leader_value(&p.leader_mixed, b) >= p.leader_value - 1e-12);
            }
        }

        #[test]
        fn quantize_error_and_idempotence(
            values in prop::collection::vec(-10.0f64..10.0, 1..20),
            eps in 1e-4f64..1.0,
        ) {
            let q = quantize(&values, eps);
            for (v, qv) in values.iter().zip(&q) {
                prop_assert!((v - qv).abs() <= eps / 2.0 + 1e-12);
            }
            let qq = quantize(&q, eps);
            for (a, b) in q.iter().zip(&qq) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn quantize_keeps_separated_argmax(
            base in prop::collection::vec(0usize..50, 2..8),
            eps in 0.01f64..0.05,
        ) {
            let mut distinct = base.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let values: Vec<f64> = distinct.iter().map(|&k| k as f64 * 0.11).collect();
            let q = quantize(&values, eps);
            let argmax = |v: &[f64]| {
                (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
            };
            prop_assert_eq!(argmax(&values), argmax(&q));
        }
    }
}
