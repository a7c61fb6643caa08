//! Draws Rayleigh fading for one slot and prints per-PRB rates and the
//! resulting per-user rates under round-robin.
//!
//! `cargo run --example channel_rates`

use slicesched::channel::{draw_channel, prb_rate, user_rates};
use slicesched::rng::{stream, Purpose};
use slicesched::schedulers::RoundRobin;
use slicesched::ScenarioConfig;

fn main() {
    let cfg = ScenarioConfig::default();
    let bw = cfg.prb_bandwidth_hz();
    println!("PRB bandwidth {:.0} Hz, rate at unit gain {:.3} Mbit/s", bw, prb_rate(1.0, cfg.mean_snr_linear, bw) / 1e6);

    let mut rng = stream(cfg.master_seed, Purpose::Channel, 0, 0);
    let ch = draw_channel(&cfg, &mut rng);
    for u in 0..ch.num_users() {
        let rates: Vec<String> = (0..6).map(|k| format!("{:5.2}", ch.rate(u, k) / 1e6)).collect();
        println!("user {u}: mean |h|^2 {:.3}, first PRBs (Mbit/s) {}", ch.mean_gain(u), rates.join(" "));
    }
    let alloc = RoundRobin::default().allocate(cfg.num_prbs, cfg.num_users());
    for (u, r) in user_rates(&ch, &alloc).iter().enumerate() {
        println!("round-robin user {u}: {} PRBs, {:.2} Mbit/s", alloc.counts()[u], r / 1e6);
    }
}
