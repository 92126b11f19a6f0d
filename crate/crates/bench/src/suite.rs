use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sne_core::game::generate_dataset;
use sne_core::offline::OfflineConfig;
use sne_core::online::LearnerConfig;
use sne_core::reward_free::ExploreConfig;

use crate::config::{ExperimentConfig, SuiteKind};
use crate::output::{sha256_file, write_csv, write_json, CSV_SCHEMA_VERSION};
use crate::runs::{offline_certify, online_run, reward_free_run};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the suite's output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub k: usize,
    #[serde(flatten)]
    pub status: RunStatus,
    pub outputs: Vec<OutputFile>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub succeeded: usize,
    pub failed: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub csv_schema_version: u32,
    pub wall_clock_secs: f64,
    pub runs: Vec<RunRecord>,
    pub summary: SuiteSummary,
}

impl RunManifest {
    pub fn all_succeeded(&self) -> bool {
        self.summary.failed == 0
    }

    /// Checks that every listed output exists and still has its hash.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        for run in &self.runs {
            for file in &run.outputs {
                let actual = sha256_file(&out_dir.join(&file.path))?;
                if actual != file.sha256 {
                    bail!("{} changed since the manifest was written", file.path);
                }
            }
        }
        Ok(())
    }
}

fn record_file(out_dir: &Path, name: String) -> Result<OutputFile> {
    Ok(OutputFile {
        sha256: sha256_file(&out_dir.join(&name))?,
        path: name,
    })
}

fn run_one(config: &ExperimentConfig, out_dir: &Path, seed: u64, k: usize) -> Result<(Vec<OutputFile>, BTreeMap<String, f64>)> {
    let spec = config.game_for(seed)?;
    let mut metrics = BTreeMap::new();
    let stem = format!("{}_seed{seed}_k{k}", config.command.name());
    let name = format!("{stem}.csv");
    match config.command {
        SuiteKind::Online => {
            let mut lc = LearnerConfig::new(k, config.bonus, seed);
            lc.epsilon = config.epsilon;
            lc.tiebreak = config.tiebreak;
            lc.mode = config.mode;
            let (report, rows) = online_run(&spec, &lc)?;
            write_csv(&out_dir.join(&name), &rows)?;
            metrics.insert("regret".into(), report.regret());
            metrics.insert("regret_per_episode".into(), report.regret() / k as f64);
            let violating = report.episodes.iter().filter(|e| e.optimism_violations > 0).count();
            metrics.insert("optimism_violation_rate".into(), violating as f64 / k as f64);
            metrics.insert("worst_certificate".into(), report.worst_certificate());
        }
        SuiteKind::Offline => {
            let behavior = config.behavior.policy(&spec, config.tiebreak)?;
            let data = generate_dataset(&spec, &behavior, &config.behavior.label(), k, seed);
            let mut oc = OfflineConfig::new(config.bonus);
            oc.epsilon = config.epsilon;
            oc.tiebreak = config.tiebreak;
            oc.mode = config.mode;
            let (plan, row) = offline_certify(&spec, &data, &oc)?;
            write_csv(&out_dir.join(&name), std::slice::from_ref(&row))?;
            metrics.insert("subopt".into(), row.subopt);
            metrics.insert("bound".into(), row.bound);
            metrics.insert("c_estimate".into(), row.c_estimate);
            metrics.insert("worst_certificate".into(), plan.worst_certificate);
        }
        SuiteKind::RewardFree => {
            let ec = ExploreConfig::new(config.k0, k, seed);
            let (est, rows) = reward_free_run(&spec, &ec, config.noise)?;
            write_csv(&out_dir.join(&name), &rows)?;
            let rewards_name = format!("{stem}_rewards.json");
            write_json(&out_dir.join(&rewards_name), &est)?;
            metrics.insert("max_abs_error".into(), rows.iter().map(|r| r.max_abs_error).fold(0.0, f64::max));
            metrics.insert("unvisited_cells".into(), est.num_unvisited() as f64);
            return Ok((vec![record_file(out_dir, name)?, record_file(out_dir, rewards_name)?], metrics));
        }
    }
    Ok((vec![record_file(out_dir, name)?], metrics))
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn summarize(config: &ExperimentConfig, runs: &[RunRecord]) -> SuiteSummary {
    let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let mut metrics = BTreeMap::new();
    let per_k = |key: &str, k: usize| -> Option<f64> {
        median(ok.iter().filter(|r| r.k == k).filter_map(|r| r.metrics.get(key).copied()).collect())
    };
    let (first, last) = (config.k_grid[0], *config.k_grid.last().expect("nonempty grid"));
    let headline = match config.command {
        SuiteKind::Online => "regret_per_episode",
        SuiteKind::Offline => "subopt",
        SuiteKind::RewardFree => "max_abs_error",
    };
    for &k in &config.k_grid {
        if let Some(m) = per_k(headline, k) {
            metrics.insert(format!("median_{headline}@{k}"), m);
        }
    }
    if first != last {
        if let (Some(a), Some(b)) = (per_k(headline, first), per_k(headline, last)) {
            if a != 0.0 {
                metrics.insert(format!("median_{headline}_ratio"), b / a);
            }
        }
    }
    let all = |key: &str| -> Vec<f64> { ok.iter().filter_map(|r| r.metrics.get(key).copied()).collect() };
    match config.command {
        SuiteKind::Online => {
            let rates = all("optimism_violation_rate");
            if !rates.is_empty() {
                metrics.insert("mean_optimism_violation_rate".into(), rates.iter().sum::<f64>() / rates.len() as f64);
            }
        }
        SuiteKind::Offline => {
            let within = ok
                .iter()
                .filter(|r| r.metrics.get("subopt") <= r.metrics.get("bound"))
                .count();
            if !ok.is_empty() {
                metrics.insert("bound_satisfied_rate".into(), within as f64 / ok.len() as f64);
            }
            let cs: Vec<f64> = ok
                .iter()
                .filter(|r| r.k == last)
                .filter_map(|r| r.metrics.get("c_estimate").copied())
                .collect();
            if let Some(min) = cs.into_iter().reduce(f64::min) {
                metrics.insert(format!("min_c_estimate@{last}"), min);
            }
        }
        SuiteKind::RewardFree => {}
    }
    let worst = all("worst_certificate").into_iter().reduce(f64::min);
    if let Some(w) = worst {
        metrics.insert("worst_certificate".into(), w);
    }
    SuiteSummary {
        succeeded: ok.len(),
        failed: runs.len() - ok.len(),
        metrics,
    }
}

/// Runs every `(seed, K)` pair, at most `jobs` at a time, and writes
/// `manifest.json` into `out_dir`. A failing run is recorded and does not
/// stop the others.
pub fn run_suite(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<RunManifest> {
    config.validate()?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let start = Instant::now();
    let pairs: Vec<(u64, usize)> = config
        .seeds
        .iter()
        .flat_map(|&s| config.k_grid.iter().map(move |&k| (s, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let runs: Vec<RunRecord> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(seed, k)| {
                let (status, outputs, metrics) = match run_one(config, out_dir, seed, k) {
                    Ok((outputs, metrics)) => {
                        info!("{} seed {seed} K {k} done", config.command.name());
                        (RunStatus::Ok, outputs, metrics)
                    }
                    Err(e) => {
                        warn!("{} seed {seed} K {k} failed: {e:#}", config.command.name());
                        (RunStatus::Failed { error: format!("{e:#}") }, Vec::new(), BTreeMap::new())
                    }
                };
                RunRecord {
                    seed,
                    k,
                    status,
                    outputs,
                    metrics,
                }
            })
            .collect()
    });
    let summary = summarize(config, &runs);
    let manifest = RunManifest {
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        csv_schema_version: CSV_SCHEMA_VERSION,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        runs,
        summary,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
