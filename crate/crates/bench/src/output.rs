use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bumped whenever a CSV column set changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One episode of an online run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRow {
    pub k: usize,
    #[serde(rename = "return")]
    pub leader_return: f64,
    pub v_star: f64,
    pub regret_inst: f64,
    pub regret_cum: f64,
    pub optimism_violations: usize,
    pub bonus_sum: f64,
}

/// Certified quantities of one offline plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub subopt: f64,
    pub bound: f64,
    pub c_estimate: f64,
}

/// Reward estimation error for one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardErrorRow {
    pub player: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    pub visited_cells: usize,
    pub unvisited_cells: usize,
    pub min_count: u64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
