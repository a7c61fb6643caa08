//! Raises one HRLLC user's dexterity index for the middle third of each
//! episode and measures how its arrivals and PRBs respond.
//!
//! `cargo run --release --example two_step_dexterity`

use slicesched::experiments::{run_two_step, TWO_STEP_EVAL_EPISODES};
use slicesched::ScenarioConfig;

fn main() -> slicesched::Result<()> {
    let out = run_two_step(&ScenarioConfig::default(), TWO_STEP_EVAL_EPISODES)?;
    let r = out.response;
    let d = &out.cfg.dexterity;
    println!("user h{} DXI {} -> {} over slots {}..{}", r.user, r.dxi_base, r.dxi_peak, d.up_slot, d.down_slot);
    println!("mean arrivals  outside {:.3}  inside {:.3}", r.outside_arrivals, r.inside_arrivals);
    println!("arrival drop   measured {:.3}  expected {:.3}", r.measured_drop(), r.expected_drop());
    println!("mean PRBs      outside {:.3}  inside {:.3}", r.outside_prbs, r.inside_prbs);
    Ok(())
}
