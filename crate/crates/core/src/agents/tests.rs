use super::*;
use crate::channel::{draw_channel, ChannelSlot};
use crate::config::Activation;
use crate::nn::{Dense, Mlp};
use crate::rng::{stream, Purpose};
use proptest::prelude::*;
use rand::Rng;

fn ctx_parts(cfg: &ScenarioConfig, seed: u64) -> (ChannelSlot, Vec<u64>, Vec<u64>, Vec<f64>) {
    let mut rng = stream(seed, Purpose::Channel, 0, 0);
    let ch = draw_channel(cfg, &mut rng);
    let u = cfg.num_users();
    let backlogs = (0..u).map(|_| rng.random_range(0..50)).collect();
    let arrivals = (0..u).map(|_| rng.random_range(0..10)).collect();
    let dxi = vec![5.0; cfg.num_hrllc];
    (ch, backlogs, arrivals, dxi)
}

fn ctx<'a>(cfg: &ScenarioConfig, parts: &'a (ChannelSlot, Vec<u64>, Vec<u64>, Vec<f64>)) -> SchedulerContext<'a> {
    SchedulerContext {
        slot: 0,
        num_embb: cfg.num_embb,
        num_hrllc: cfg.num_hrllc,
        backlogs: &parts.1,
        arrivals: &parts.2,
        channel: &parts.0,
        dxi: &parts.3,
    }
}

#[test]
fn observation_layout() {
    let cfg = ScenarioConfig::default();
    assert_eq!(observation_len(4, 3), 27);
    let zeros_u = vec![0u64; 7];
    let zeros_f = vec![0.0; 7];
    let dxi = vec![1.0, 2.0, 3.0];
    let input = ObservationInput {
        pending: &zeros_u,
        mean_gains: &zeros_f,
        prev_rates: &zeros_f,
        prev_drift: Drift::default(),
        prev_y: 0.0,
        dxi: &dxi,
    };
    let obs = encode_observation(&input, &cfg);
    assert_eq!(obs.len(), 27);
    assert!(obs[..24].iter().all(|&x| x == 0.0));
    assert_eq!(&obs[24..], &dxi[..]);
}

#[test]
fn queue_features_scale_linearly() {
    let cfg = ScenarioConfig::default();
    let pending: Vec<u64> = vec![3, 0, 7, 1, 4, 9, 2];
    let doubled: Vec<u64> = pending.iter().map(|x| 2 * x).collect();
    let gains = vec![1.0; 7];
    let rates = vec![2e6; 7];
    let dxi = vec![5.0; 3];
    let make = |p: &[u64]| {
        encode_observation(
            &ObservationInput {
                pending: p,
                mean_gains: &gains,
                prev_rates: &rates,
                prev_drift: Drift { total: 3.0, embb: 1.0, hrllc: 2.0 },
                prev_y: 50.0,
                dxi: &dxi,
            },
            &cfg,
        )
    };
    let a = make(&pending);
    let b = make(&doubled);
    let queue_idx = [0, 1, 2, 3, 13, 14, 15];
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if queue_idx.contains(&i) {
            assert_eq!(2.0 * x, *y);
        } else {
            assert_eq!(x, y);
        }
    }
    assert_eq!(a[23], cfg.obs.y_cap);
}

#[test]
fn action_space_counts() {
    let space = ActionSpace::from_config(&ScenarioConfig::default());
    assert_eq!(space.hrllc_options(), 19);
    assert_eq!(space.joint_count(), 57);
    for i in 0..57 {
        assert_eq!(space.joint_index(space.from_joint(i)), i);
    }
}

#[test]
fn decode_extremes() {
    let cfg = ScenarioConfig::default();
    let space = ActionSpace::from_config(&cfg);
    let parts = ctx_parts(&cfg, 1);
    let c = ctx(&cfg, &parts);
    let min = space.decode_counts(Action { hrllc: 0, embb: 0 }, &c).unwrap();
    assert_eq!(&min[4..], &[1, 1, 1]);
    assert_eq!(min[..4].iter().sum::<usize>(), 22);
    let max = space.decode_counts(Action { hrllc: 18, embb: 2 }, &c).unwrap();
    assert_eq!(&max[..4], &[1, 1, 1, 1]);
    assert_eq!(max[4..].iter().sum::<usize>(), 21);
    assert!(space.decode(Action { hrllc: 19, embb: 0 }, &c).is_err());
}

#[test]
fn every_action_decodes_feasibly() {
    for (seed, (ne, nh, k)) in [(4, 3, 25), (4, 5, 25), (1, 1, 2), (2, 6, 8)].into_iter().enumerate() {
        let mut cfg = ScenarioConfig::default();
        cfg.num_embb = ne;
        cfg.num_hrllc = nh;
        cfg.num_prbs = k;
        let space = ActionSpace::from_config(&cfg);
        for s in 0..20 {
            let parts = ctx_parts(&cfg, (seed * 100 + s) as u64);
            let c = ctx(&cfg, &parts);
            for a in space.iter() {
                let alloc = space.decode(a, &c).unwrap();
                alloc.check(k, ne + nh).unwrap();
                let hrllc: usize = alloc.counts()[ne..].iter().sum();
                assert_eq!(hrllc, space.hrllc_prbs(a));
            }
        }
    }
}

#[test]
fn hrllc_division_follows_pending_packets() {
    let cfg = ScenarioConfig::default();
    let space = ActionSpace::from_config(&cfg);
    let mut parts = ctx_parts(&cfg, 2);
    parts.1 = vec![0; 7];
    parts.2 = vec![0, 0, 0, 0, 10, 0, 0];
    let c = ctx(&cfg, &parts);
    // k_h = 8: one each plus the remaining five to the only busy user
    let counts = space.decode_counts(Action { hrllc: 5, embb: 0 }, &c).unwrap();
    assert_eq!(&counts[4..], &[6, 1, 1]);
}

#[test]
fn cost_examples() {
    assert!((step_cost(&[1e6, 2e6], 0.0) - 1.25).abs() < 1e-12);
    assert!((step_cost(&[0.0, 0.0], 1e-6) - 2e6).abs() < 1e-6);
    let mut rng = stream(3, Purpose::Policy, 0, 0);
    for _ in 0..1000 {
        let rates: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..2e7)).collect();
        let base = step_cost(&rates, 1e-6);
        let mut up = rates.clone();
        let i = rng.random_range(0..7);
        up[i] += rng.random_range(1e3..1e6);
        assert!(step_cost(&up, 1e-6) < base);
    }
}

#[test]
fn reward_examples() {
    assert!((reward(-4.5, 1.25, 1.0, 0.0, 0.3) - 3.25).abs() < 1e-12);
    assert_eq!(reward(2.0, 1.0, 3.0, 0.7, -0.02), -(2.0 + 3.0));
    assert!(reward(1.0, 1.0, 1.0, 0.6, 0.5) < reward(1.0, 1.0, 1.0, 0.5, 0.5));
    for c in [-3.0, 0.5, 1024.0] {
        let r0 = reward(1.5, 0.75, 2.0, 0.5, 0.875);
        let r1 = reward(1.5 + c, 0.75, 2.0, 0.5, 0.875);
        assert_eq!(r1, r0 - c);
    }
}

#[test]
fn reward_ranking_matches_cost_ranking_without_dual() {
    let cfg = ScenarioConfig::default();
    let space = ActionSpace::from_config(&cfg);
    for seed in 0..10 {
        let parts = ctx_parts(&cfg, 50 + seed);
        let c = ctx(&cfg, &parts);
        let costs: Vec<f64> = space
            .iter()
            .map(|a| {
                let alloc = space.decode(a, &c).unwrap();
                step_cost(&crate::channel::user_rates(c.channel, &alloc), cfg.eps_cost)
            })
            .collect();
        let rewards: Vec<f64> = costs.iter().map(|&h| reward(0.0, h, 1e6, 0.0, 1.0)).collect();
        let best_cost = (0..costs.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap();
        assert_eq!(crate::nn::argmax(&rewards), best_cost);
    }
}

fn small_cfg() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.nn.hidden = vec![16, 16];
    cfg
}

#[test]
fn dqn_uniform_exploration() {
    let cfg = small_cfg();
    let mut agent = DqnAgent::new(&cfg);
    agent.epsilon_override = Some(1.0);
    let obs = vec![0.1; observation_len(4, 3)];
    let mut rng = stream(4, Purpose::Policy, 0, 0);
    let n = 100_000;
    let mut counts = vec![0usize; 57];
    for _ in 0..n {
        counts[agent.select_joint(&obs, &mut rng).unwrap()] += 1;
    }
    let expected = n as f64 / 57.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-square with 56 degrees of freedom
    assert!(chi2 < 94.46, "chi2 {chi2}");
}

#[test]
fn dqn_greedy_picks_argmax() {
    let cfg = small_cfg();
    let mut agent = DqnAgent::new(&cfg);
    agent.epsilon_override = Some(0.0);
    let mut out = Dense::zeros(16, 57, Activation::Identity);
    out.bias[41] = 1.0;
    let mut layers = agent.q.layers.clone();
    *layers.last_mut().unwrap() = out;
    agent.q = Mlp::from_layers(layers).unwrap();
    let mut rng = stream(5, Purpose::Policy, 0, 0);
    assert_eq!(agent.select_joint(&vec![0.3; 27], &mut rng).unwrap(), 41);
}

#[test]
fn dqn_learns_and_syncs() {
    let mut cfg = small_cfg();
    cfg.dqn.batch_size = 4;
    cfg.dqn.target_sync = 10;
    cfg.dqn.train_every = 2;
    let mut agent = DqnAgent::new(&cfg);
    let mut rng = stream(6, Purpose::Replay, 0, 0);
    let t = Transition {
        obs: vec![0.2; 27],
        action: Action { hrllc: 3, embb: 1 },
        reward: -5.0,
        next_obs: vec![0.1; 27],
        terminal: false,
    };
    let mut updates = 0;
    for _ in 0..10 {
        if agent.learn(&t, &mut rng).unwrap().is_some() {
            updates += 1;
        }
    }
    assert_eq!(updates, 4);
    assert_eq!(agent.q, agent.target);
    assert_eq!(agent.replay.len(), 10);
}

#[test]
fn replay_ring_overwrites_oldest() {
    let mut rb = ReplayBuffer::new(3);
    for r in 0..5 {
        rb.push(Transition {
            obs: vec![],
            action: Action { hrllc: 0, embb: 0 },
            reward: r as f64,
            next_obs: vec![],
            terminal: false,
        });
    }
    assert_eq!(rb.len(), 3);
    let mut rng = stream(7, Purpose::Replay, 0, 0);
    assert!(rb.sample(100, &mut rng).iter().all(|t| t.reward >= 2.0));
}

fn zero_value_agent() -> A2cAgent {
    let mut cfg = small_cfg();
    cfg.a2c.reward_scale = 1.0;
    let mut agent = A2cAgent::new(&cfg);
    for w in agent.net.value.slices_mut().into_iter().flatten() {
        *w = 0.0;
    }
    agent
}

#[test]
fn a2c_single_transition_td() {
    let mut agent = zero_value_agent();
    let t = Transition {
        obs: vec![0.5; 27],
        action: Action { hrllc: 2, embb: 0 },
        reward: 1.0,
        next_obs: vec![0.4; 27],
        terminal: false,
    };
    let stats = agent.update(&t).unwrap();
    assert_eq!(stats.td_error, 1.0);
    assert!(stats.entropy > 0.0);
}

#[test]
fn zero_advantage_leaves_only_entropy_gradient() {
    let p = crate::nn::softmax(&[0.3, -0.2, 1.0]);
    let g = crate::nn::policy_logit_grad(&p, 1, 0.0, 0.0);
    assert!(g.iter().all(|&x| x == 0.0));
}

#[test]
fn critic_loss_decreases_after_small_step() {
    let mut cfg = small_cfg();
    cfg.lr_actor = 1e-4;
    cfg.lr_critic = 1e-4;
    for seed in 0..10 {
        cfg.master_seed = seed;
        let mut agent = A2cAgent::new(&cfg);
        let mut rng = stream(seed, Purpose::Policy, 0, 0);
        let t = Transition {
            obs: (0..27).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action: Action { hrllc: rng.random_range(0..19), embb: rng.random_range(0..3) },
            reward: rng.random_range(-300.0..300.0),
            next_obs: (0..27).map(|_| rng.random_range(-1.0..1.0)).collect(),
            terminal: false,
        };
        let before = agent.update(&t).unwrap().critic_loss;
        let after = agent.update(&t).unwrap().critic_loss;
        assert!(after < before, "seed {seed}: {after} >= {before}");
    }
}

#[test]
fn eval_mode_is_greedy_and_frozen() {
    let cfg = small_cfg();
    let mut agent = A2cAgent::new(&cfg);
    agent.set_training(false);
    let obs = vec![0.3; 27];
    let mut rng = stream(8, Purpose::Policy, 0, 0);
    let first = agent.select(&obs, &mut rng).unwrap();
    for _ in 0..20 {
        assert_eq!(agent.select(&obs, &mut rng).unwrap(), first);
    }
    let t = Transition { obs: obs.clone(), action: first, reward: 1.0, next_obs: obs, terminal: false };
    let before = agent.net.clone();
    assert!(agent.learn(&t, &mut rng).unwrap().is_none());
    assert_eq!(agent.net, before);
}

#[test]
fn checkpoints_restore_policies() {
    let cfg = small_cfg();
    let a2c = A2cAgent::new(&cfg);
    let back = A2cAgent::from_checkpoint(&cfg, &a2c.checkpoint().unwrap()).unwrap();
    assert_eq!(back.net, a2c.net);
    let dqn = DqnAgent::new(&cfg);
    let back = DqnAgent::from_checkpoint(&cfg, &dqn.checkpoint().unwrap()).unwrap();
    assert_eq!(back.q, dqn.q);
    assert!(A2cAgent::from_checkpoint(&cfg, &dqn.checkpoint().unwrap()).is_err());
    let mut other = cfg.clone();
    other.num_prbs = 30;
    assert!(DqnAgent::from_checkpoint(&other, &dqn.checkpoint().unwrap()).is_err());
}

proptest! {
    #[test]
    fn decoded_allocations_are_feasible(seed in any::<u64>(), joint in 0usize..57) {
        let cfg = ScenarioConfig::default();
        let space = ActionSpace::from_config(&cfg);
        let parts = ctx_parts(&cfg, seed);
        let c = ctx(&cfg, &parts);
        let alloc = space.decode(space.from_joint(joint), &c).unwrap();
        prop_assert!(alloc.check(25, 7).is_ok());
    }
}
