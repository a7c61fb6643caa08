//! Five HRLLC users with fixed dexterity indices 0 to 10: per-user means of
//! arrivals, departures and PRBs under the trained policy.
//!
//! `cargo run --release --example dexterity_sensitivity`

use slicesched::experiments::{run_dex_sensitivity, SENSITIVITY_EVAL_EPISODES};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let out = run_dex_sensitivity(&ScenarioConfig::default(), SENSITIVITY_EVAL_EPISODES)?;
    println!("user   DXI  arrivals  departures   PRBs  rate (Mbit/s)");
    for r in &out.table.rows {
        println!(
            "  h{}  {:4.1}  {:8.3}  {:10.3}  {:5.2}  {:8.2}",
            r.user,
            r.dxi,
            r.mean_arrivals,
            r.mean_departures,
            r.mean_prbs,
            r.mean_rate_bps / 1e6
        );
    }
    println!("Spearman(DXI, PRBs) = {:.3}", out.table.rank_correlation);
    Ok(())
}
