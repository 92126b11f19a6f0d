use anyhow::{bail, Result};
use sne_core::game::{FeatureMode, OfflineDataset, TabularGameSpec};
use sne_core::offline::{coverage_margin, run_pvi_sne, suboptimality, theorem_bound, OfflineConfig, OfflinePlan};
use sne_core::online::{run_ovi_sne, LearnerConfig, OnlineRunReport};
use sne_core::planner::exact_sne;
use sne_core::reward_free::{reward_free_explore, EmpiricalRewards, ExploreConfig, HiddenRewardEnv, RewardNoise};
use sne_core::stage::TieBreak;

use crate::output::{CertificationRow, OnlineRow, RewardErrorRow};

/// `optimistic`, `pessimistic`, or `pessimistic:<margin>`.
pub fn parse_tiebreak(text: &str) -> Result<TieBreak> {
    let tb = match text.split_once(':') {
        None if text == "optimistic" => TieBreak::Optimistic,
        None if text == "pessimistic" => TieBreak::pessimistic(),
        Some(("pessimistic", margin)) => TieBreak::Pessimistic {
            strict_margin: margin.parse()?,
        },
        _ => bail!("unknown tie-breaking rule {text:?}"),
    };
    tb.validate()?;
    Ok(tb)
}

/// `joint` or `leader-controller`.
pub fn parse_mode(text: &str) -> Result<FeatureMode> {
    match text {
        "joint" => Ok(FeatureMode::Joint),
        "leader-controller" | "leader_controller" => Ok(FeatureMode::LeaderController),
        _ => bail!("unknown controller mode {text:?}"),
    }
}

pub fn online_rows(report: &OnlineRunReport) -> Vec<OnlineRow> {
    report
        .episodes
        .iter()
        .map(|e| OnlineRow {
            k: e.k,
            leader_return: e.leader_return,
            v_star: e.v_star,
            regret_inst: e.regret_inst,
            regret_cum: e.regret_cum,
            optimism_violations: e.optimism_violations,
            bonus_sum: e.bonus_sum,
        })
        .collect()
}

/// Plans the reference equilibrium and runs the online learner.
pub fn online_run(spec: &TabularGameSpec, config: &LearnerConfig) -> Result<(OnlineRunReport, Vec<OnlineRow>)> {
    let truth = exact_sne(spec, config.tiebreak)?;
    let report = run_ovi_sne(spec, spec.rewards(), config, &truth)?;
    let rows = online_rows(&report);
    Ok((report, rows))
}

/// Plans from the dataset and certifies the plan against the exact
/// equilibrium.
pub fn offline_certify(
    spec: &TabularGameSpec,
    dataset: &OfflineDataset,
    config: &OfflineConfig,
) -> Result<(OfflinePlan, CertificationRow)> {
    let truth = exact_sne(spec, config.tiebreak)?;
    let plan = run_pvi_sne(spec, dataset, spec.rewards(), config)?;
    let row = CertificationRow {
        k: dataset.num_episodes(),
        subopt: suboptimality(spec, &plan, &truth),
        bound: theorem_bound(spec, &truth, &plan),
        c_estimate: coverage_margin(spec, &plan, &truth)?,
    };
    Ok((plan, row))
}

/// Explores `spec` with its rewards hidden and scores the estimates
/// against the true tables.
pub fn reward_free_run(
    spec: &TabularGameSpec,
    config: &ExploreConfig,
    noise: RewardNoise,
) -> Result<(EmpiricalRewards, Vec<RewardErrorRow>)> {
    let env = HiddenRewardEnv::new(spec.clone(), noise);
    let (est, _) = reward_free_explore(&env, config)?;
    let truth = spec.rewards();
    let visited: Vec<usize> = (0..est.num_cells()).filter(|&i| !est.mask[i]).collect();
    let rows = (0..=spec.num_followers())
        .map(|p| {
            let errs: Vec<f64> = visited
                .iter()
                .map(|&i| (est.rewards.player(p)[i] - truth.player(p)[i]).abs())
                .collect();
            RewardErrorRow {
                player: p,
                max_abs_error: errs.iter().copied().fold(0.0, f64::max),
                mean_abs_error: if errs.is_empty() { 0.0 } else { errs.iter().sum::<f64>() / errs.len() as f64 },
                visited_cells: visited.len(),
                unvisited_cells: est.num_unvisited(),
                min_count: est.min_visited_count().unwrap_or(0),
            }
        })
        .collect();
    Ok((est, rows))
}
