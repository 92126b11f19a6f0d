//! Optimistic least-squares value iteration (OVI-SNE) and the ridge and
//! backward-pass machinery it shares with the offline learner.

mod lsvi;
mod ovi;
mod ridge;

pub use lsvi::{build_q, extract_step, StepPolicy, StepQ};
pub(crate) use ovi::backward_pass;
pub use ovi::{
    run_ovi_sne, theorem_beta, BonusSpec, DecompositionSummary, EpisodeRecord, LearnerConfig,
    OnlineRunReport, BAND_TOL, OPTIMISM_TOL,
};
pub use ridge::{RidgeAccumulator, RidgeStep};
