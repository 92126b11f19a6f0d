use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::spec::{GameDims, JointActions, RewardTables, TabularGameSpec};
use crate::rng::master_rng;

fn reward<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let v: f64 = rng.random_range(-1.0..=1.0);
    ((v * 1e6).round() / 1e6).clamp(-1.0, 1.0)
}

fn dirichlet_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

fn build(dims: &GameDims, seed: u64, leader_controller: bool) -> TabularGameSpec {
    let mut rng = master_rng(seed);
    let profiles = JointActions::new(dims.follower_actions.clone()).total();
    let cells = dims.horizon * dims.num_states * dims.leader_actions * profiles;
    let leader = (0..cells).map(|_| reward(&mut rng)).collect();
    let followers = dims
        .follower_actions
        .iter()
        .map(|_| (0..cells).map(|_| reward(&mut rng)).collect())
        .collect();
    let mut transition = Vec::with_capacity(cells * dims.num_states);
    for _ in 0..dims.horizon * dims.num_states * dims.leader_actions {
        if leader_controller {
            let row = dirichlet_row(dims.num_states, &mut rng);
            for _ in 0..profiles {
                transition.extend_from_slice(&row);
            }
        } else {
            for _ in 0..profiles {
                transition.extend(dirichlet_row(dims.num_states, &mut rng));
            }
        }
    }
    TabularGameSpec::new(dims.clone(), 0, RewardTables { leader, followers }, transition)
        .expect("random game dimensions are consistent")
}

/// Random game with uniform rewards on a 1e-6 grid and Dirichlet(1)
/// transition rows. The initial state is 0.
pub fn random_game(dims: &GameDims, seed: u64) -> TabularGameSpec {
    build(dims, seed, false)
}

/// Like [`random_game`] but each transition row is shared by every follower
/// profile, so followers only affect rewards.
pub fn random_leader_controller_game(dims: &GameDims, seed: u64) -> TabularGameSpec {
    build(dims, seed, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_game() {
        let dims = GameDims::new(3, 2, vec![2], 3);
        assert_eq!(random_game(&dims, 5), random_game(&dims, 5));
        assert_ne!(random_game(&dims, 5), random_game(&dims, 6));
    }

    #[test]
    fn generated_games_are_valid() {
        for seed in 0..20 {
            let g = random_game(&GameDims::new(4, 3, vec![2, 2], 2), seed);
            assert!(g.validate().is_valid());
            let lc = random_leader_controller_game(&GameDims::new(4, 3, vec![3], 2), seed);
            assert!(lc.validate().is_valid());
            assert!(lc.is_leader_controller());
        }
    }

    #[test]
    fn documented_shapes() {
        let g = random_game(&GameDims::new(5, 3, vec![3], 4), 0);
        assert_eq!(g.rewards().leader.len(), 4 * 5 * 3 * 3);
        assert_eq!(g.rewards().followers[0].len(), 4 * 5 * 3 * 3);
        assert_eq!(g.transition_tensor().len(), 4 * 5 * 3 * 3 * 5);
    }

    #[test]
    fn rewards_lie_on_the_grid() {
        let g = random_game(&GameDims::new(2, 2, vec![2], 2), 1);
        for &r in &g.rewards().leader {
            assert!((r * 1e6 - (r * 1e6).round()).abs() < 1e-6);
        }
    }
}
