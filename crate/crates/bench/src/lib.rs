//! Experiment runner behind the `sne` command line tool: single runs,
//! seed × K sweeps, CSV/JSON artifacts and a hashed manifest.

pub mod config;
pub mod output;
pub mod runs;
pub mod suite;

pub use config::{Behavior, ExperimentConfig, GameSource, GameSizes, SuiteKind};
pub use output::{read_csv, write_csv, write_json, CertificationRow, OnlineRow, RewardErrorRow, CSV_SCHEMA_VERSION};
pub use runs::{offline_certify, online_rows, online_run, parse_mode, parse_tiebreak, reward_free_run};
pub use suite::{run_suite, OutputFile, RunManifest, RunRecord, RunStatus, SuiteSummary};
