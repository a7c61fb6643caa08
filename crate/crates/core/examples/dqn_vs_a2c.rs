//! Trains A2C and DQN under identical settings and compares their return
//! curves.
//!
//! `cargo run --release --example dqn_vs_a2c`

use slicesched::experiments::run_drl_compare;
use slicesched::metrics::{head_tail_means, plateau};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let cfg = ScenarioConfig::default();
    let out = run_drl_compare(&cfg)?;
    let c = &out.comparison;
    for (p, name) in c.policies.iter().enumerate() {
        let s: Vec<f64> = c.smoothed.iter().map(|row| row[p]).collect();
        let (head, tail) = head_tail_means(&s, 0.1);
        println!(
            "{name:>8}: smoothed return first 10% {head:9.1}, last 10% {tail:9.1}, final/peak slope {:.3}",
            plateau(&s, 50).ratio
        );
    }
    let eps = out.dqn.records.last().map(|r| r.learner.epsilon).unwrap_or(f64::NAN);
    println!("DQN exploration rate at the end of training: {eps:.3}");
    Ok(())
}
