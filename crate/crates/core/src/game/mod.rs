//! Tabular Markov games, their one-hot linear realization, policies and
//! sampling.

mod features;
mod policy;
mod random;
mod sampling;
mod spec;

pub use features::{one_hot_features, FeatureMap, FeatureMode, LinearTransitionModel};
pub use policy::{JointPolicy, PolicyTable};
pub use random::{random_game, random_leader_controller_game};
pub use sampling::{
    audit_compliance, generate_dataset, sample_actions, sample_episode, LoggedStep,
    OfflineDataset, Step, Trajectory,
};
pub use spec::{
    from_nested, to_nested, GameDims, JointActions, RewardTables, TabularGameSpec,
    ValidationReport, Violation, FORMAT_VERSION, PROB_TOL,
};
