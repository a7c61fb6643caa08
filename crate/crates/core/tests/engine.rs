use slicesched::agents::{build_policy, PolicyKind};
use slicesched::config::DexterityProfile;
use slicesched::constraint::{cdf_at, delay_cdf, reliability};
use slicesched::experiments::{baseline_policies, evaluate_policies};
use slicesched::metrics::{compare_policies, dexterity_sensitivity, RunSummary};
use slicesched::sim::{check_conservation, evaluate, World};
use slicesched::traffic::{effective_intensity, stationary_probs};
use slicesched::{Error, ScenarioConfig};

fn short() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.slots_per_episode = 60;
    cfg.nn.hidden = vec![16, 16];
    cfg
}

#[test]
fn every_policy_sees_the_same_traffic_and_fading() {
    let cfg = short();
    let mut pols = baseline_policies(&cfg, &[PolicyKind::RoundRobin, PolicyKind::ProportionalFair, PolicyKind::A2c, PolicyKind::Dqn]);
    let mut traces = Vec::new();
    for (_, p) in pols.iter_mut() {
        let mut world = World::new(&cfg).unwrap();
        let rec = world.run_episode(p.as_mut(), 7, cfg.slots_per_episode, true).unwrap();
        check_conservation(&rec).unwrap();
        traces.push(rec);
    }
    for other in &traces[1..] {
        for (a, b) in traces[0].slots.iter().zip(&other.slots) {
            assert_eq!(a.arrivals, b.arrivals);
            assert_eq!(a.mmpp_states, b.mmpp_states);
        }
    }
}

#[test]
fn cdf_at_threshold_matches_reliability() {
    let cfg = short();
    let mut pols = baseline_policies(&cfg, &[PolicyKind::RoundRobin, PolicyKind::ProportionalFair]);
    let runs = evaluate_policies(&cfg, &mut pols, 0, 4).unwrap();
    let cmp = compare_policies(&runs, 3, cfg.d_max_s).unwrap();
    for (i, (_, recs)) in runs.iter().enumerate() {
        let delays: Vec<f64> = recs.iter().flat_map(|r| r.hrllc_delays.iter().copied()).collect();
        let direct = reliability(&delays, cfg.d_max_s).unwrap();
        assert_eq!(cmp.reliability[i], direct);
        assert_eq!(cdf_at(&cmp.cdfs[i], cfg.d_max_s), direct);
        assert_eq!(cmp.cdfs[i], delay_cdf(&delays).unwrap());
        let summary = RunSummary::from_records(recs, 3, cfg.d_max_s).unwrap();
        assert_eq!(summary.reliability, Some(direct));
        assert_eq!(summary.smoothed_returns.len(), summary.returns.len());
    }
    assert_eq!(cmp.returns.len(), 4);
    assert!(cmp.returns.iter().all(|row| row.len() == 2));
}

#[test]
fn policy_compared_with_itself_gives_identical_curves() {
    let cfg = short();
    let mut pols = baseline_policies(&cfg, &[PolicyKind::ProportionalFair]);
    let runs = evaluate_policies(&cfg, &mut pols, 1, 3).unwrap();
    let twice = vec![runs[0].clone(), ("pf-again".to_string(), runs[0].1.clone())];
    let cmp = compare_policies(&twice, 2, cfg.d_max_s).unwrap();
    assert!(cmp.returns.iter().all(|row| row[0] == row[1]));
    assert_eq!(cmp.cdfs[0], cmp.cdfs[1]);
    // aggregation is a pure function of the records
    assert_eq!(cmp, compare_policies(&twice, 2, cfg.d_max_s).unwrap());

    let short_run = vec![runs[0].clone(), ("cut".to_string(), runs[0].1[..2].to_vec())];
    assert!(matches!(compare_policies(&short_run, 2, cfg.d_max_s), Err(Error::MismatchedRuns(_))));
}

#[test]
fn increasing_dexterity_lowers_expected_arrivals() {
    // the stationary mean of max(lambda - beta * dxi, 0) is strictly
    // decreasing while the slow state stays unclamped
    let cfg = ScenarioConfig::default();
    let (p1, p2) = stationary_probs(cfg.mmpp_alpha, cfg.mmpp_beta).unwrap();
    let expected = |d: f64| {
        p1 * effective_intensity(cfg.lambda_slow, cfg.beta_dex, d) + p2 * effective_intensity(cfg.lambda_burst, cfg.beta_dex, d)
    };
    let dxi = [0.0, 2.5, 5.0, 7.5];
    for w in dxi.windows(2) {
        assert!(expected(w[1]) < expected(w[0]));
    }

    let mut c = short();
    c.num_hrllc = 4;
    c.dexterity = DexterityProfile::per_user(dxi.to_vec());
    let mut rr = build_policy(PolicyKind::RoundRobin, &c);
    let recs = evaluate(&c, rr.as_mut(), 0, 400, false).unwrap();
    let table = dexterity_sensitivity(&recs, &dxi, c.num_embb).unwrap();
    for (row, d) in table.rows.iter().zip(dxi) {
        let e = expected(d);
        // 400 x 60 slots with episode-level state draws: a few percent
        assert!((row.mean_arrivals - e).abs() < 0.08 * e + 0.05, "dxi {d}: {} vs {e}", row.mean_arrivals);
    }
    assert!(table.rows.windows(2).all(|w| w[1].mean_arrivals < w[0].mean_arrivals));
    assert!((-1.0..=1.0).contains(&table.rank_correlation));
}

#[test]
fn equal_dexterity_gives_equal_shares() {
    let mut c = short();
    c.num_hrllc = 4;
    c.dexterity = DexterityProfile::per_user(vec![5.0; 4]);
    let mut pf = build_policy(PolicyKind::ProportionalFair, &c);
    let recs = evaluate(&c, pf.as_mut(), 0, 300, false).unwrap();
    let table = dexterity_sensitivity(&recs, &[5.0; 4], c.num_embb).unwrap();
    let prbs: Vec<f64> = table.rows.iter().map(|r| r.mean_prbs).collect();
    let mean = prbs.iter().sum::<f64>() / 4.0;
    assert!(prbs.iter().all(|p| (p - mean).abs() < 0.1 * mean), "{prbs:?}");
    // stable sort keeps user order on ties
    assert_eq!(table.rows.iter().map(|r| r.user).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
}
