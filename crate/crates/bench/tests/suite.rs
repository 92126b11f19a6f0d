use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use sne_bench::{read_csv, run_suite, ExperimentConfig, OnlineRow, RunManifest, RunStatus};

fn config(json: &str) -> ExperimentConfig {
    serde_json::from_str(json).unwrap()
}

const ONLINE: &str = r#"{"command": "online",
    "game": {"sizes": {"states": 3, "leader_actions": 2, "follower_actions": [2], "horizon": 3}},
    "seeds": [0, 1, 2], "k_grid": [10, 20], "bonus": {"kind": "fixed", "beta": 1.0}}"#;

fn hashes(m: &RunManifest) -> Vec<(u64, usize, Vec<String>)> {
    let mut v: Vec<_> = m
        .runs
        .iter()
        .map(|r| (r.seed, r.k, r.outputs.iter().map(|o| o.sha256.clone()).collect()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_reproduce_every_output() {
    let c = config(ONLINE);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_suite(&c, a.path(), 1).unwrap();
    let second = run_suite(&c, b.path(), 3).unwrap();
    assert_eq!(hashes(&first), hashes(&second));
    assert_eq!(first.summary.metrics, second.summary.metrics);
    first.verify(a.path()).unwrap();
}

#[test]
fn manifest_has_one_record_per_seed_and_k() {
    let c = config(ONLINE);
    let dir = tempfile::tempdir().unwrap();
    let m = run_suite(&c, dir.path(), 2).unwrap();
    let pairs: BTreeSet<(u64, usize)> = m.runs.iter().map(|r| (r.seed, r.k)).collect();
    assert_eq!(m.runs.len(), 6);
    assert_eq!(pairs.len(), 6);
    assert!(m.all_succeeded());
    assert!(m.summary.metrics.contains_key("median_regret_per_episode@20"));
    let on_disk: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk.runs, m.runs);
    assert_eq!(on_disk.csv_schema_version, 1);
}

#[test]
fn failing_runs_do_not_stop_the_others() {
    // seeds 1, 3 and 8 give stage games with no pure follower equilibrium
    let c = config(
        r#"{"command": "online",
        "game": {"sizes": {"states": 3, "leader_actions": 2, "follower_actions": [3, 3], "horizon": 3}},
        "seeds": [0, 1, 2, 3], "k_grid": [5]}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let m = run_suite(&c, dir.path(), 2).unwrap();
    assert_eq!((m.summary.succeeded, m.summary.failed), (2, 2));
    assert!(!m.all_succeeded());
    for r in &m.runs {
        let ok = r.status == RunStatus::Ok;
        assert_eq!(ok, r.seed % 2 == 0, "seed {}", r.seed);
        assert_eq!(ok, !r.outputs.is_empty());
        if let RunStatus::Failed { error } = &r.status {
            assert!(error.contains("pure"));
        }
    }
    m.verify(dir.path()).unwrap();
}

#[test]
fn online_csv_has_one_row_per_episode() {
    let c = config(ONLINE);
    let dir = tempfile::tempdir().unwrap();
    run_suite(&c, dir.path(), 1).unwrap();
    let path = dir.path().join("online_seed2_k20.csv");
    let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "k,return,v_star,regret_inst,regret_cum,optimism_violations,bonus_sum");
    let rows: Vec<OnlineRow> = read_csv(&path).unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.windows(2).all(|w| w[1].regret_cum >= w[0].regret_cum - 1e-12));
}

#[test]
fn offline_and_reward_free_suites_write_their_tables() {
    let offline = config(
        r#"{"command": "offline",
        "game": {"sizes": {"states": 2, "leader_actions": 2, "follower_actions": [2], "horizon": 2}},
        "seeds": [0, 1], "k_grid": [50, 200], "behavior": {"kind": "mixture", "alpha": 0.5}}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let m = run_suite(&offline, dir.path(), 2).unwrap();
    assert!(m.all_succeeded());
    assert_eq!(m.summary.metrics["bound_satisfied_rate"], 1.0);
    let header = first_line(&dir.path().join("offline_seed1_k200.csv"));
    assert_eq!(header, "K,subopt,bound,c_estimate");

    let rf = config(
        r#"{"command": "reward_free",
        "game": {"sizes": {"states": 2, "leader_actions": 2, "follower_actions": [2], "horizon": 2}},
        "seeds": [0], "k_grid": [100], "k0": 10}"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let m = run_suite(&rf, dir.path(), 1).unwrap();
    assert!(m.all_succeeded());
    assert_eq!(m.runs[0].outputs.len(), 2);
    let header = first_line(&dir.path().join("rewardfree_seed0_k100.csv"));
    assert_eq!(header, "player,max_abs_error,mean_abs_error,visited_cells,unvisited_cells,min_count");
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}
