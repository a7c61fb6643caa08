//! Drives one HRLLC traffic chain for a million slots and compares the
//! empirical state occupancy and arrival mean with the stationary values.
//!
//! `cargo run --release --example traffic_mmpp`

use slicesched::rng::{stream, Purpose};
use slicesched::traffic::{mean_rate, sample_hrllc_arrivals, stationary_probs, MmppChain, MmppState};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let cfg = ScenarioConfig::default();
    let mut rng = stream(cfg.master_seed, Purpose::Traffic, 0, 0);
    let mut chain = MmppChain::from_config(&cfg, &mut rng)?;
    let slots = 1_000_000u64;
    let (mut slow, mut arrivals) = (0u64, 0u64);
    for _ in 0..slots {
        if chain.step(&mut rng) == MmppState::Slow {
            slow += 1;
        }
        arrivals += sample_hrllc_arrivals(&chain, cfg.beta_dex, 0.0, &mut rng) as u64;
    }
    let (p1, p2) = stationary_probs(cfg.mmpp_alpha, cfg.mmpp_beta)?;
    let (p12, p21) = chain.transition_probs();
    println!("per-slot switch probabilities: {p12:.3e} / {p21:.3e}");
    println!("slow-state occupancy  {:.4} (stationary {p1:.4}, burst {p2:.4})", slow as f64 / slots as f64);
    println!(
        "mean arrivals / slot  {:.4} (stationary {:.4})",
        arrivals as f64 / slots as f64,
        mean_rate(cfg.mmpp_alpha, cfg.mmpp_beta, cfg.lambda_slow, cfg.lambda_burst)?
    );
    // with mean holding times of 5 s against 1 ms slots, a million slots
    // only sees a few hundred state changes, so the occupancy is noisy
    Ok(())
}
