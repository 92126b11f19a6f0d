//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Problems here have a handful of variables, so the tableau is kept dense
//! and every pivot touches the full matrix.

use crate::error::{Result, SneError};

/// Pivot and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize objectiveᵀx` subject to the constraints and `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per constraint with the sign convention of the
    /// maximization dual: `≤` rows get `y ≥ 0`, `≥` rows get `y ≤ 0`.
    pub duals: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on columns `< allowed`. `Ok(false)` means
    /// unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let entering = (0..allowed).find(|&j| self.obj[j] < -LP_TOL);
            let Some(c) = entering else {
                return true;
            };
            let rhs = self.width;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > LP_TOL {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            if ratio < best - LP_TOL
                                || (ratio <= best + LP_TOL && self.basis[i] < self.basis[j])
                            {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        self.obj = vec![0.0; self.width + 1];
        for (j, &c) in costs.iter().enumerate() {
            self.obj[j] = -c;
        }
        for i in 0..self.rows.len() {
            let f = self.obj[self.basis[i]];
            if f != 0.0 {
                let row = self.rows[i].clone();
                for (v, rv) in self.obj.iter_mut().zip(&row) {
                    *v -= f * rv;
                }
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(SneError::Shape(format!(
                "constraint has {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite())
        || lp
            .constraints
            .iter()
            .any(|c| !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()))
    {
        return Err(SneError::Shape("linear program has non-finite entries".into()));
    }

    // Normalize to nonnegative right-hand sides.
    let mut signs = Vec::with_capacity(m);
    let mut senses = Vec::with_capacity(m);
    for c in &lp.constraints {
        if c.rhs < 0.0 {
            signs.push(-1.0);
            senses.push(match c.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            });
        } else {
            signs.push(1.0);
            senses.push(c.sense);
        }
    }
    // Columns: originals, then one slack/surplus per inequality, then
    // artificials. Each row owns an identity column (slack or artificial).
    let num_slack = senses.iter().filter(|s| **s != Sense::Eq).count();
    let num_art = senses.iter().filter(|s| **s != Sense::Le).count();
    let art_start = n + num_slack;
    let width = art_start + num_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut identity_col = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, art_start);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        for (j, &v) in c.coeffs.iter().enumerate() {
            row[j] = signs[i] * v;
        }
        row[width] = signs[i] * c.rhs;
        match senses[i] {
            Sense::Le => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                identity_col.push(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis.push(next_art);
                identity_col.push(next_art);
                next_art += 1;
            }
            Sense::Eq => {
                row[next_art] = 1.0;
                basis.push(next_art);
                identity_col.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        width,
    };

    if num_art > 0 {
        let mut phase1 = vec![0.0; width];
        for c in phase1.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        t.set_objective(&phase1);
        t.optimize(width);
        if t.obj[width] < -LP_TOL * (1.0 + m as f64) {
            return Err(SneError::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| t.rows[r][j].abs() > LP_TOL) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut costs = vec![0.0; width];
    costs[..n].copy_from_slice(&lp.objective);
    t.set_objective(&costs);
    if !t.optimize(art_start) {
        return Err(SneError::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[r][width].max(0.0);
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals = (0..m).map(|i| signs[i] * t.obj[identity_col[i]]).collect();
    Ok(LpSolution { x, value, duals })
}

/// Optimal commitment over the leader's simplex.
#[derive(Clone, Debug)]
pub struct LeaderLpSolution {
    pub strategy: Vec<f64>,
    pub value: f64,
    /// Nonnegative multipliers of the `gᵀπ ≥ rhs` rows.
    pub multipliers: Vec<f64>,
}

/// Maximizes `objectiveᵀπ` over distributions `π` with `gᵀπ ≥ 0` for every
/// row `g` of `constraints`.
pub fn leader_lp(objective: &[f64], constraints: &[Vec<f64>]) -> Result<LeaderLpSolution> {
    leader_lp_with_rhs(objective, constraints, &vec![0.0; constraints.len()])
}

/// As [`leader_lp`] with rows `gᵀπ ≥ rhs`.
pub fn leader_lp_with_rhs(
    objective: &[f64],
    constraints: &[Vec<f64>],
    rhs: &[f64],
) -> Result<LeaderLpSolution> {
    let n = objective.len();
    let mut rows = Vec::with_capacity(constraints.len() + 1);
    rows.push(Constraint {
        coeffs: vec![1.0; n],
        sense: Sense::Eq,
        rhs: 1.0,
    });
    for (g, &r) in constraints.iter().zip(rhs) {
        rows.push(Constraint {
            coeffs: g.clone(),
            sense: Sense::Ge,
            rhs: r,
        });
    }
    let sol = solve(&LinearProgram {
        objective: objective.to_vec(),
        constraints: rows,
    })?;
    let total: f64 = sol.x.iter().sum();
    let strategy: Vec<f64> = sol.x.iter().map(|v| v / total).collect();
    let value = objective.iter().zip(&strategy).map(|(c, p)| c * p).sum();
    Ok(LeaderLpSolution {
        strategy,
        value,
        multipliers: sol.duals[1..].iter().map(|y| (-y).max(0.0)).collect(),
    })
}

/// Upper bound on the leader LP certified by the multipliers `u ≥ 0`:
/// `max_a (c + Gᵀu)_a − rhsᵀu`.
pub fn dual_bound(objective: &[f64], constraints: &[Vec<f64>], rhs: &[f64], multipliers: &[f64]) -> f64 {
    let mut shifted = objective.to_vec();
    for (g, &u) in constraints.iter().zip(multipliers) {
        let u = u.max(0.0);
        for (s, gv) in shifted.iter_mut().zip(g) {
            *s += u * gv;
        }
    }
    let top = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top - rhs.iter().zip(multipliers).map(|(r, u)| r * u.max(0.0)).sum::<f64>()
}
