use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spec::TabularGameSpec;
use crate::error::{Result, SneError};

/// What the feature map is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// φ(x, a, b)
    Joint,
    /// φ(x, a); transitions must not depend on the followers.
    LeaderController,
}

/// Feature vectors for every `(x, a, b)` (or `(x, a)`) input of a game.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    dim: usize,
    mode: FeatureMode,
    leader_actions: usize,
    num_profiles: usize,
    table: Vec<Vec<f64>>,
    support: Vec<Vec<(usize, f64)>>,
}

impl FeatureMap {
    /// `table[key]` must be the feature of the input with that key, see
    /// [`FeatureMap::key`]. Every vector needs `‖φ‖₂ ≤ 1`.
    pub fn new(
        mode: FeatureMode,
        leader_actions: usize,
        num_profiles: usize,
        dim: usize,
        table: Vec<Vec<f64>>,
    ) -> Result<Self> {
        for (key, phi) in table.iter().enumerate() {
            if phi.len() != dim {
                return Err(SneError::Shape(format!(
                    "feature {key} has length {}, expected {dim}",
                    phi.len()
                )));
            }
            let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1.0 + 1e-12 {
                return Err(SneError::InvalidGame(format!(
                    "feature {key} has norm {norm} > 1"
                )));
            }
        }
        let support = table
            .iter()
            .map(|phi| {
                phi.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect()
            })
            .collect();
        Ok(Self {
            dim,
            mode,
            leader_actions,
            num_profiles,
            table,
            support,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn num_keys(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn key(&self, x: usize, a: usize, b: usize) -> usize {
        match self.mode {
            FeatureMode::Joint => (x * self.leader_actions + a) * self.num_profiles + b,
            FeatureMode::LeaderController => x * self.leader_actions + a,
        }
    }

    pub fn phi(&self, key: usize) -> &[f64] {
        &self.table[key]
    }

    pub fn phi_vector(&self, key: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.table[key])
    }

    /// Nonzero entries of φ for `key`.
    pub fn sparse(&self, key: usize) -> &[(usize, f64)] {
        &self.support[key]
    }

    #[inline]
    pub fn dot(&self, key: usize, w: &DVector<f64>) -> f64 {
        self.support[key].iter().map(|&(i, v)| v * w[i]).sum()
    }

    /// φᵀ M φ.
    pub fn quad_form(&self, key: usize, m: &DMatrix<f64>) -> f64 {
        let s = &self.support[key];
        let mut acc = 0.0;
        for &(i, vi) in s {
            for &(j, vj) in s {
                acc += vi * m[(i, j)] * vj;
            }
        }
        acc
    }

    /// Adds `scale · φ` to `target`.
    #[inline]
    pub fn axpy(&self, key: usize, scale: f64, target: &mut DVector<f64>) {
        for &(i, v) in &self.support[key] {
            target[i] += scale * v;
        }
    }
}

/// Per-step `d × S` matrices whose column `x'` is `μ_h(x')`.
#[derive(Clone, Debug)]
pub struct LinearTransitionModel {
    mu: Vec<DMatrix<f64>>,
}

impl LinearTransitionModel {
    pub fn new(mu: Vec<DMatrix<f64>>) -> Self {
        Self { mu }
    }

    pub fn step(&self, h: usize) -> &DMatrix<f64> {
        &self.mu[h]
    }

    /// `μ_h(S)`, the row sums of `M_h`.
    pub fn total_mass(&self, h: usize) -> DVector<f64> {
        let m = &self.mu[h];
        DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
    }

    /// `max |φᵀ M_h − P_h|` over every step, input and next state.
    pub fn reconstruction_error(&self, spec: &TabularGameSpec, features: &FeatureMap) -> f64 {
        let mut worst: f64 = 0.0;
        for h in 0..spec.horizon() {
            let m = &self.mu[h];
            for x in 0..spec.num_states() {
                for a in 0..spec.leader_actions() {
                    for b in 0..spec.num_profiles() {
                        let key = features.key(x, a, b);
                        let row = spec.transition(h, x, a, b);
                        for (next, &p) in row.iter().enumerate() {
                            let pred: f64 = features
                                .sparse(key)
                                .iter()
                                .map(|&(i, v)| v * m[(i, next)])
                                .sum();
                            worst = worst.max((pred - p).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Tabular one-hot realization of the linear structure.
pub fn one_hot_features(
    spec: &TabularGameSpec,
    mode: FeatureMode,
) -> Result<(FeatureMap, LinearTransitionModel)> {
    if mode == FeatureMode::LeaderController {
        if let Some((h, x, a)) = spec.leader_controller_violation(1e-12) {
            return Err(SneError::LeaderControllerViolation { h, x, a });
        }
    }
    let s = spec.num_states();
    let al = spec.leader_actions();
    let nb = spec.num_profiles();
    let dim = match mode {
        FeatureMode::Joint => s * al * nb,
        FeatureMode::LeaderController => s * al,
    };
    let table = (0..dim)
        .map(|k| {
            let mut v = vec![0.0; dim];
            v[k] = 1.0;
            v
        })
        .collect();
    let features = FeatureMap::new(mode, al, nb, dim, table)?;
    let mu = (0..spec.horizon())
        .map(|h| {
            let mut m = DMatrix::zeros(dim, s);
            for x in 0..s {
                for a in 0..al {
                    for b in 0..nb {
                        let key = features.key(x, a, b);
                        for (next, &p) in spec.transition(h, x, a, b).iter().enumerate() {
                            m[(key, next)] = p;
                        }
                    }
                }
            }
            m
        })
        .collect();
    Ok((features, LinearTransitionModel::new(mu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_game, random_leader_controller_game, GameDims};

    #[test]
    fn joint_dimension_counts_every_cell() {
        let g = random_game(&GameDims::new(2, 2, vec![3], 2), 1);
        let (phi, _) = one_hot_features(&g, FeatureMode::Joint).unwrap();
        assert_eq!(phi.dim(), 12);
        for k in 0..phi.num_keys() {
            let v = phi.phi(k);
            assert_eq!(v.iter().filter(|&&e| e == 1.0).count(), 1);
            assert_eq!(v.iter().filter(|&&e| e == 0.0).count(), 11);
        }
    }

    #[test]
    fn one_hot_mass_is_sqrt_d() {
        let g = random_game(&GameDims::new(3, 2, vec![2], 3), 4);
        let (phi, mu) = one_hot_features(&g, FeatureMode::Joint).unwrap();
        for h in 0..3 {
            let mass = mu.total_mass(h);
            assert!(mass.iter().all(|m| (m - 1.0).abs() < 1e-12));
            assert!((mass.norm() - (phi.dim() as f64).sqrt()).abs() < 1e-12);
        }
        assert!(mu.reconstruction_error(&g, &phi) <= 1e-12);
    }

    #[test]
    fn leader_controller_dimension() {
        let g = random_leader_controller_game(&GameDims::new(2, 2, vec![3], 2), 9);
        let (phi, mu) = one_hot_features(&g, FeatureMode::LeaderController).unwrap();
        assert_eq!(phi.dim(), 4);
        assert!(mu.reconstruction_error(&g, &phi) <= 1e-12);
    }

    #[test]
    fn leader_controller_mode_rejects_follower_dependent_transitions() {
        let g = random_game(&GameDims::new(2, 2, vec![2], 2), 2);
        assert!(matches!(
            one_hot_features(&g, FeatureMode::LeaderController),
            Err(SneError::LeaderControllerViolation { .. })
        ));
    }

    #[test]
    fn oversized_features_are_rejected() {
        let err = FeatureMap::new(FeatureMode::Joint, 1, 1, 2, vec![vec![1.0, 1.0]]);
        assert!(matches!(err, Err(SneError::InvalidGame(_))));
    }
}
