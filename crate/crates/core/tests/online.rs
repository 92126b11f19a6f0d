use sne_core::game::{one_hot_features, random_game, random_leader_controller_game, FeatureMode, GameDims};
use sne_core::online::{build_q, run_ovi_sne, BonusSpec, LearnerConfig, RidgeAccumulator};
use sne_core::planner::exact_sne;
use sne_core::stage::{TieBreak, CERT_TOL};
use sne_core::SneError;

#[test]
fn first_episode_q_is_reward_plus_clipped_bonus() {
    let g = random_game(&GameDims::new(2, 2, vec![2], 3), 1);
    let (features, _) = one_hot_features(&g, FeatureMode::Joint).unwrap();
    let acc = RidgeAccumulator::for_features(3, &features, 2);
    let beta = 1.5;
    for h in 0..3 {
        let step = build_q(&g, g.rewards(), &features, &acc, h, beta, 1.0, &[0.7, -0.2]);
        let cap = beta.min((3 - h - 1) as f64);
        for x in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let cell = g.step_cell(x, a, b);
                    let expected = g.leader_reward(h, x, a, b) + cap;
                    assert!((step.q[cell] - expected).abs() < 1e-12);
                    assert!((step.bonus[cell] - beta).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let g = random_game(&GameDims::new(3, 2, vec![2], 3), 4);
    let truth = exact_sne(&g, TieBreak::Optimistic).unwrap();
    let mut config = LearnerConfig::new(40, BonusSpec::Fixed { beta: 0.5 }, 11);
    config.decompose = true;
    let a = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
    let b = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
    assert_eq!(a, b);
    config.seed = 12;
    let c = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
    assert_ne!(a.episodes, c.episodes);
}

#[test]
fn telemetry_is_consistent() {
    let g = random_game(&GameDims::new(3, 2, vec![2], 3), 6);
    let truth = exact_sne(&g, TieBreak::Optimistic).unwrap();
    let mut config = LearnerConfig::new(60, BonusSpec::theorem(0.1, 0.1), 3);
    config.decompose = true;
    let report = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
    assert_eq!(report.epsilon, 1.0 / (60.0 * 3.0));
    let mut cum = 0.0;
    for (i, e) in report.episodes.iter().enumerate() {
        assert_eq!(e.k, i + 1);
        cum += e.regret_inst;
        assert!((e.regret_cum - cum).abs() < 1e-9);
        assert!(e.regret_inst >= -1e-9, "SNE value is the best the leader can guarantee");
        assert!(e.worst_certificate >= -CERT_TOL);
        assert_eq!(e.lower_bound_violations, 0);
        assert!(e.decomposition.as_ref().unwrap().identity_residual <= 1e-7);
    }
    assert_eq!(report.regret(), report.regret_at(60));
}

#[test]
fn zero_bonus_still_yields_valid_responses() {
    let g = random_game(&GameDims::new(2, 3, vec![2, 2], 2), 8);
    let truth = exact_sne(&g, TieBreak::Optimistic).unwrap();
    let config = LearnerConfig::new(30, BonusSpec::Fixed { beta: 0.0 }, 0);
    let report = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
    assert!(report.worst_certificate() >= -CERT_TOL);
}

#[test]
fn mismatched_reference_is_rejected() {
    let g = random_game(&GameDims::new(2, 2, vec![2], 2), 8);
    let truth = exact_sne(&g, TieBreak::Optimistic).unwrap();
    let mut config = LearnerConfig::new(5, BonusSpec::Fixed { beta: 0.0 }, 0);
    config.tiebreak = TieBreak::pessimistic();
    assert!(matches!(
        run_ovi_sne(&g, g.rewards(), &config, &truth),
        Err(SneError::ConfigMismatch(_))
    ));
}

#[test]
fn pessimistic_responses_match_exact_myopic_responses() {
    for seed in 0..3 {
        let g = random_leader_controller_game(&GameDims::new(3, 2, vec![3], 3), seed);
        let truth = exact_sne(&g, TieBreak::pessimistic()).unwrap();
        let mut config = LearnerConfig::new(50, BonusSpec::Fixed { beta: 0.5 }, seed);
        config.tiebreak = TieBreak::pessimistic();
        config.mode = FeatureMode::LeaderController;
        config.check_responses = true;
        let report = run_ovi_sne(&g, g.rewards(), &config, &truth).unwrap();
        assert!(report.episodes.iter().all(|e| e.response_mismatches == Some(0)));
    }
}
