//! One-shot leader-follower matrix games.

mod lp;
mod solver;

pub use lp::{dual_bound, leader_lp, leader_lp_with_rhs, solve, Constraint, LeaderLpSolution, LinearProgram, LpSolution, Sense, LP_TOL};
pub use solver::{
    follower_pure_nash_set, grid_oracle, quantize, quantize_value, respond, solve_stage_sne,
    StageGame, StageRequest, StageSolution, TieBreak, BR_TOL, CERT_TOL, GRID_LIMIT,
};
