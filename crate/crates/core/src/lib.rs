//! Stackelberg-Nash equilibria in episodic Markov games with one leader and
//! myopic followers: exact planning, optimistic online learning, pessimistic
//! offline learning and reward-free exploration.

pub mod error;
pub mod game;
pub mod offline;
pub mod online;
pub mod planner;
pub mod reward_free;
pub mod rng;
pub mod stage;

pub use error::{Result, SneError};
