//! Runs round-robin and proportional-fair on identical traffic and fading
//! and prints queue and delay statistics.
//!
//! `cargo run --release --example baseline_schedulers`

use slicesched::agents::PolicyKind;
use slicesched::experiments::{baseline_policies, evaluate_policies};
use slicesched::metrics::{compare_policies, mean};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let cfg = ScenarioConfig::default();
    let mut policies = baseline_policies(&cfg, &[PolicyKind::RoundRobin, PolicyKind::ProportionalFair]);
    let runs = evaluate_policies(&cfg, &mut policies, 0, 20)?;
    let cmp = compare_policies(&runs, cfg.eval.ma_window, cfg.d_max_s)?;
    for (i, (name, recs)) in runs.iter().enumerate() {
        let qe: Vec<f64> = recs.iter().map(|r| r.mean_backlog_embb).collect();
        let qh: Vec<f64> = recs.iter().map(|r| r.mean_backlog_hrllc).collect();
        println!(
            "{name:>3}: backlog eMBB {:6.2} HRLLC {:6.2}, Pr(delay <= {} s) = {:.4} over {} packets",
            mean(&qe),
            mean(&qh),
            cfg.d_max_s,
            cmp.reliability[i],
            cmp.delay_samples[i]
        );
    }
    Ok(())
}
