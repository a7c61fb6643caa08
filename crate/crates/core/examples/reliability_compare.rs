//! Trains A2C, then compares it with round-robin and proportional-fair on
//! shared evaluation seeds and writes the delay CDF chart.
//!
//! `cargo run --release --example reliability_compare`

use slicesched::agents::PolicyKind;
use slicesched::experiments::{baseline_policies, reliability_by_seed};
use slicesched::metrics::compare_policies;
use slicesched::plot::{cdf_chart, render_svg};
use slicesched::sim::run_training;
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let cfg = ScenarioConfig::default();
    let trained = run_training(&cfg, PolicyKind::A2c)?;
    let mut policies = baseline_policies(&cfg, &[PolicyKind::RoundRobin, PolicyKind::ProportionalFair]);
    policies.insert(0, (PolicyKind::A2c.as_str().to_string(), trained.policy));

    let eval = reliability_by_seed(&cfg, &mut policies, cfg.eval.seeds, cfg.eval.episodes)?;
    println!("seed  {}", eval.sweep.policies.join("  "));
    for (seed, row) in eval.sweep.reliability.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|r| format!("{r:.4}")).collect();
        println!("{seed:>4}  {}", cells.join("  "));
    }
    let cmp = compare_policies(&eval.pooled, cfg.eval.ma_window, cfg.d_max_s)?;
    let path = std::env::temp_dir().join("slicesched-cdf.svg");
    std::fs::write(&path, render_svg(&cdf_chart(&cmp, cfg.d_max_s, cfg.chi_h))?)?;
    println!("delay CDF chart written to {}", path.display());
    Ok(())
}
