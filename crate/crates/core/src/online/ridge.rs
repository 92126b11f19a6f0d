use nalgebra::{DMatrix, DVector};

use crate::game::FeatureMap;

/// Ridge statistics of one step: `Λ = I + Σ φφᵀ`, its inverse kept up to
/// date by rank-one updates, the target sum `Σ φ v`, and a count table of
/// observed `(feature key, next state)` pairs so targets can be recomputed
/// for a new value function.
#[derive(Clone, Debug)]
pub struct RidgeStep {
    pub lambda: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub targets: DVector<f64>,
    pub count: usize,
    transitions: Vec<u64>,
    num_states: usize,
}

impl RidgeStep {
    fn new(dim: usize, num_keys: usize, num_states: usize) -> Self {
        Self {
            lambda: DMatrix::identity(dim, dim),
            inverse: DMatrix::identity(dim, dim),
            targets: DVector::zeros(dim),
            count: 0,
            transitions: vec![0; num_keys * num_states],
            num_states,
        }
    }

    /// Adds `φφᵀ` to `Λ` and updates `Λ⁻¹` by Sherman-Morrison.
    fn add_outer(&mut self, phi: &[(usize, f64)]) {
        let dim = self.lambda.nrows();
        for &(i, vi) in phi {
            for &(j, vj) in phi {
                self.lambda[(i, j)] += vi * vj;
            }
        }
        let mut u = DVector::zeros(dim);
        for &(j, vj) in phi {
            u.axpy(vj, &self.inverse.column(j), 1.0);
        }
        let denom = 1.0 + phi.iter().map(|&(j, vj)| vj * u[j]).sum::<f64>();
        self.inverse.ger(-1.0 / denom, &u, &u, 1.0);
        self.count += 1;
    }
}

/// Per-step ridge regressions of a least-squares value iteration learner.
#[derive(Clone, Debug)]
pub struct RidgeAccumulator {
    steps: Vec<RidgeStep>,
    dim: usize,
}

fn sparse(phi: &[f64]) -> Vec<(usize, f64)> {
    phi.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

impl RidgeAccumulator {
    /// `num_keys` and `num_states` size the transition count tables; pass
    /// zero for either when only [`RidgeAccumulator::update`] is used.
    pub fn new(horizon: usize, dim: usize, num_keys: usize, num_states: usize) -> Self {
        Self {
            steps: (0..horizon)
                .map(|_| RidgeStep::new(dim, num_keys, num_states))
                .collect(),
            dim,
        }
    }

    pub fn for_features(horizon: usize, features: &FeatureMap, num_states: usize) -> Self {
        Self::new(horizon, features.dim(), features.num_keys(), num_states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self, h: usize) -> &RidgeStep {
        &self.steps[h]
    }

    /// `Λ += φφᵀ`, `Λ⁻¹` by rank-one update, `u += φ·target`.
    pub fn update(&mut self, h: usize, phi: &[f64], target: f64) {
        let s = &mut self.steps[h];
        s.add_outer(&sparse(phi));
        for (t, v) in s.targets.iter_mut().zip(phi) {
            *t += v * target;
        }
    }

    /// Records a transition from input `key` to `next_state` at step `h`.
    pub fn record(&mut self, h: usize, features: &FeatureMap, key: usize, next_state: usize) {
        let s = &mut self.steps[h];
        s.add_outer(features.sparse(key));
        s.transitions[key * s.num_states + next_state] += 1;
    }

    /// `Λ⁻¹ u` for the accumulated targets.
    pub fn weights(&self, h: usize) -> DVector<f64> {
        let s = &self.steps[h];
        &s.inverse * &s.targets
    }

    /// `Λ⁻¹ Σ_τ φ_τ V(x'_τ)` over every recorded transition of step `h`.
    pub fn regress(&self, h: usize, features: &FeatureMap, values: &[f64]) -> DVector<f64> {
        let s = &self.steps[h];
        let mut rhs = DVector::zeros(self.dim);
        for key in 0..features.num_keys() {
            let counts = &s.transitions[key * s.num_states..(key + 1) * s.num_states];
            let total: f64 = counts.iter().zip(values).map(|(&n, v)| n as f64 * v).sum();
            if total != 0.0 {
                features.axpy(key, total, &mut rhs);
            }
        }
        &s.inverse * rhs
    }

    /// Visit count of input `key` at step `h`.
    pub fn visits(&self, h: usize, key: usize) -> u64 {
        let s = &self.steps[h];
        s.transitions[key * s.num_states..(key + 1) * s.num_states].iter().sum()
    }

    /// Replaces every tracked inverse by a direct inversion of `Λ`.
    pub fn refresh_inverses(&mut self) {
        for s in &mut self.steps {
            s.inverse = s.lambda.clone().try_inverse().expect("Λ is positive definite");
        }
    }

    /// Max-norm gap between the tracked inverse and a direct inversion.
    pub fn inverse_drift(&self, h: usize) -> f64 {
        let s = &self.steps[h];
        let direct = s.lambda.clone().try_inverse().expect("Λ is positive definite");
        (&direct - &s.inverse).amax()
    }
}
