use serde::{Deserialize, Serialize};

use crate::game::{JointPolicy, TabularGameSpec};

/// Exact `V` and `Q` of every player under one policy pair.
///
/// `v[p]` is flat `[h][x]` with an extra all-zero step `H`; `q[p]` is flat
/// `[h][x][a][b]`. Player 0 is the leader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueTables {
    pub num_states: usize,
    pub cells_per_step: usize,
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl ValueTables {
    pub fn v(&self, player: usize, h: usize, x: usize) -> f64 {
        self.v[player][h * self.num_states + x]
    }

    pub fn q(&self, player: usize, h: usize, cell: usize) -> f64 {
        self.q[player][h * self.cells_per_step + cell]
    }

    pub fn leader_v(&self, h: usize, x: usize) -> f64 {
        self.v(0, h, x)
    }

    /// `V_h(·)` of `player` as a slice over states.
    pub fn v_step(&self, player: usize, h: usize) -> &[f64] {
        &self.v[player][h * self.num_states..(h + 1) * self.num_states]
    }
}

/// Dynamic-programming evaluation of `policy` for every player.
pub fn evaluate_policies(spec: &TabularGameSpec, policy: &JointPolicy) -> ValueTables {
    let s = spec.num_states();
    let hz = spec.horizon();
    let cells = spec.cells_per_step();
    let nb = spec.num_profiles();
    let al = spec.leader_actions();
    let players = spec.num_followers() + 1;
    let mut v = vec![vec![0.0; (hz + 1) * s]; players];
    let mut q = vec![vec![0.0; hz * cells]; players];
    for h in (0..hz).rev() {
        for x in 0..s {
            let dist = policy.action_dist(spec.joint(), h, x);
            for a in 0..al {
                for b in 0..nb {
                    let cell = spec.step_cell(x, a, b);
                    let row = spec.transition(h, x, a, b);
                    for p in 0..players {
                        let next = &v[p][(h + 1) * s..(h + 2) * s];
                        let cont: f64 = row.iter().zip(next).map(|(pr, vn)| pr * vn).sum();
                        let r = spec.rewards().player(p)[h * cells + cell];
                        q[p][h * cells + cell] = r + cont;
                    }
                }
            }
            for p in 0..players {
                let qs = &q[p][h * cells + x * al * nb..h * cells + (x + 1) * al * nb];
                v[p][h * s + x] = dist.iter().zip(qs).map(|(w, qv)| w * qv).sum();
            }
        }
    }
    ValueTables {
        num_states: s,
        cells_per_step: cells,
        v,
        q,
    }
}

/// Visitation probabilities `ρ[h][x][a][b]` of `policy` from the initial
/// state.
pub fn occupancy(spec: &TabularGameSpec, policy: &JointPolicy) -> Vec<f64> {
    let s = spec.num_states();
    let cells = spec.cells_per_step();
    let nb = spec.num_profiles();
    let al = spec.leader_actions();
    let mut rho = vec![0.0; spec.horizon() * cells];
    let mut state = vec![0.0; s];
    state[spec.initial_state()] = 1.0;
    for h in 0..spec.horizon() {
        let mut next = vec![0.0; s];
        for x in 0..s {
            if state[x] == 0.0 {
                continue;
            }
            let dist = policy.action_dist(spec.joint(), h, x);
            for a in 0..al {
                for b in 0..nb {
                    let w = state[x] * dist[a * nb + b];
                    if w == 0.0 {
                        continue;
                    }
                    rho[h * cells + spec.step_cell(x, a, b)] = w;
                    for (n, p) in next.iter_mut().zip(spec.transition(h, x, a, b)) {
                        *n += w * p;
                    }
                }
            }
        }
        state = next;
    }
    rho
}

/// State marginals `d[h][x]` of an occupancy tensor.
pub fn state_marginals(spec: &TabularGameSpec, rho: &[f64]) -> Vec<f64> {
    let per_state = spec.leader_actions() * spec.num_profiles();
    rho.chunks(per_state).map(|c| c.iter().sum()).collect()
}
