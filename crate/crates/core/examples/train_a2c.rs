//! Trains the Lyapunov-Lagrangian A2C scheduler on the default scenario,
//! saves a checkpoint and evaluates the greedy policy.
//!
//! `cargo run --release --example train_a2c [-- key=value ...]`

use slicesched::agents::{build_policy, PolicyKind};
use slicesched::constraint::reliability;
use slicesched::metrics::{head_tail_means, moving_average, plateau};
use slicesched::sim::{evaluate, train_policy};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).collect();
    let cfg = ScenarioConfig::default().with_overrides(&overrides)?;
    let run = train_policy(&cfg, build_policy(PolicyKind::A2c, &cfg), false, |r| {
        if r.episode % 25 == 0 {
            println!(
                "episode {:3}  return {:9.1}  backlog e/h {:5.2}/{:5.2}  lambda {:.3}  entropy {:.3}",
                r.episode, r.episode_return, r.mean_backlog_embb, r.mean_backlog_hrllc, r.final_lambda, r.learner.entropy
            );
        }
    })?;
    let smoothed = moving_average(&run.returns(), cfg.eval.ma_window)?;
    let (head, tail) = head_tail_means(&smoothed, 0.1);
    let p = plateau(&smoothed, 50);
    println!("smoothed return: first 10% {head:.1}, last 10% {tail:.1}, final/peak slope {:.3}", p.ratio);

    let path = std::env::temp_dir().join("slicesched-a2c.bin");
    std::fs::write(&path, run.policy.checkpoint().expect("learned policy"))?;
    println!("checkpoint written to {}", path.display());

    let mut policy = run.policy;
    let recs = evaluate(&cfg, policy.as_mut(), 0, cfg.eval.episodes, false)?;
    let delays: Vec<f64> = recs.iter().flat_map(|r| r.hrllc_delays.iter().copied()).collect();
    println!("greedy evaluation: Pr(delay <= {} s) = {:.4}", cfg.d_max_s, reliability(&delays, cfg.d_max_s)?);
    Ok(())
}
