use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sne_bench::{read_csv, CertificationRow, OnlineRow, RewardErrorRow};
use sne_core::game::{OfflineDataset, TabularGameSpec};
use sne_core::planner::SnePlan;
use sne_core::stage::StageSolution;

fn sne(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sne"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "sne {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gen(dir: &Path) {
    sne(
        dir,
        &["gen", "--states", "3", "--leader-actions", "2", "--follower-actions", "2", "--horizon", "3", "--seed", "7", "--out", "game.json"],
    );
}

#[test]
fn gen_is_seeded_and_plan_reads_it_back() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path());
    let again = sne(
        dir.path(),
        &["gen", "--states", "3", "--leader-actions", "2", "--follower-actions", "2", "--horizon", "3", "--seed", "7"],
    );
    let a = TabularGameSpec::read(&dir.path().join("game.json")).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&again.stdout).unwrap();
    assert_eq!(a.to_json(), b);

    let plan = sne(dir.path(), &["plan", "--spec", "game.json"]);
    let plan: SnePlan = serde_json::from_slice(&plan.stdout).unwrap();
    assert!(plan.leader_value(0, a.initial_state()) > 0.0);
}

#[test]
fn stage_solves_a_commitment_game() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("stage.json"),
        r#"{"leader": [[0.5, 1.0], [0.25, 0.75]], "followers": [[[1.0, 0.0], [0.0, 1.0]]]}"#,
    )
    .unwrap();
    let out = sne(dir.path(), &["stage", "--input", "stage.json"]);
    let sol: StageSolution = serde_json::from_slice(&out.stdout).unwrap();
    // committing to (1/2, 1/2) makes the follower indifferent and it breaks toward the leader
    assert!((sol.leader_value - 0.875).abs() < 1e-7);
    assert_eq!(sol.follower_profile, 1);
    assert!((sol.leader_mixed[0] - 0.5).abs() < 1e-7);
}

#[test]
fn online_offline_and_reward_free_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d);

    sne(d, &["online", "--spec", "game.json", "--episodes", "30", "--beta", "1", "--out", "on"]);
    let rows: Vec<OnlineRow> = read_csv(&d.join("on/online.csv")).unwrap();
    assert_eq!(rows.len(), 30);
    assert!(d.join("on/report.json").exists());

    sne(d, &["collect", "--spec", "game.json", "--episodes", "80", "--behavior", "mixture:0.5", "--out", "data.jsonl"]);
    let data = OfflineDataset::read(&d.join("data.jsonl")).unwrap();
    assert_eq!(data.num_episodes(), 80);
    sne(d, &["offline", "--spec", "game.json", "--dataset", "data.jsonl", "--beta-theorem", "1,0.1", "--out", "off"]);
    let cert: Vec<CertificationRow> = read_csv(&d.join("off/certification.csv")).unwrap();
    assert_eq!(cert.len(), 1);
    assert_eq!(cert[0].k, 80);
    assert!(cert[0].subopt <= cert[0].bound);

    sne(d, &["rewardfree", "--spec", "game.json", "--k0", "10", "--k", "200", "--out", "rf"]);
    let errs: Vec<RewardErrorRow> = read_csv(&d.join("rf/errors.csv")).unwrap();
    assert_eq!(errs.len(), 2);
    // exact observations leave no error on visited cells
    assert!(errs.iter().all(|r| r.max_abs_error < 1e-12));
}

#[test]
fn suite_exit_code_reports_failed_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let write = |name: &str, seeds: &str| {
        fs::write(
            d.join(name),
            format!(
                r#"{{"command": "online", "game": {{"sizes": {{"states": 3, "leader_actions": 2,
                "follower_actions": [3, 3], "horizon": 3}}}}, "seeds": {seeds}, "k_grid": [5]}}"#
            ),
        )
        .unwrap();
    };
    write("good.json", "[0, 2]");
    write("mixed.json", "[0, 1]");
    sne(d, &["suite", "--config", "good.json", "--out", "good", "--jobs", "2"]);
    assert!(d.join("good/manifest.json").exists());
    let out = Command::new(env!("CARGO_BIN_EXE_sne"))
        .current_dir(d)
        .args(["suite", "--config", "mixed.json", "--out", "mixed"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(d.join("mixed/online_seed0_k5.csv").exists());
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sne"))
        .current_dir(dir.path())
        .args(["plan", "--spec", "missing.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}
