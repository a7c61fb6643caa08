//! Rayleigh block fading and Shannon rates per PRB.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::schedulers::Allocation;

/// Squared fading gains `|h_ij|^2` for every (user, PRB) pair of one slot.
///
/// Users are indexed eMBB first, then HRLLC, matching the rest of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSlot {
    num_users: usize,
    num_prbs: usize,
    gains: Vec<f64>,
    pub mean_snr_linear: f64,
    pub prb_bandwidth_hz: f64,
}

impl ChannelSlot {
    /// Builds a slot from row-major gains (`num_users` rows of `num_prbs`).
    pub fn new(
        num_users: usize,
        num_prbs: usize,
        gains: Vec<f64>,
        mean_snr_linear: f64,
        prb_bandwidth_hz: f64,
    ) -> Result<Self> {
        if gains.len() != num_users * num_prbs {
            return Err(Error::DimensionMismatch {
                context: "channel gain matrix",
                expected: num_users * num_prbs,
                got: gains.len(),
            });
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::NonFinite("channel gains".into()));
        }
        Ok(Self {
            num_users,
            num_prbs,
            gains,
            mean_snr_linear,
            prb_bandwidth_hz,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_prbs(&self) -> usize {
        self.num_prbs
    }

    pub fn gain(&self, user: usize, prb: usize) -> f64 {
        self.gains[user * self.num_prbs + prb]
    }

    pub fn gains_of(&self, user: usize) -> &[f64] {
        &self.gains[user * self.num_prbs..(user + 1) * self.num_prbs]
    }

    /// Rate user `user` would get on PRB `prb`.
    pub fn rate(&self, user: usize, prb: usize) -> f64 {
        prb_rate(self.gain(user, prb), self.mean_snr_linear, self.prb_bandwidth_hz)
    }

    pub fn mean_gain(&self, user: usize) -> f64 {
        self.gains_of(user).iter().sum::<f64>() / self.num_prbs as f64
    }
}

/// Fresh i.i.d. unit-mean exponential power gains for every user and PRB.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelSlot {
    let n = cfg.num_users() * cfg.num_prbs;
    let gains: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    ChannelSlot {
        num_users: cfg.num_users(),
        num_prbs: cfg.num_prbs,
        gains,
        mean_snr_linear: cfg.mean_snr_linear,
        prb_bandwidth_hz: cfg.prb_bandwidth_hz(),
    }
}

/// Shannon rate in bits/s of one PRB.
pub fn prb_rate(gain_sq: f64, mean_snr: f64, prb_bandwidth_hz: f64) -> f64 {
    prb_bandwidth_hz * (1.0 + mean_snr * gain_sq).log2()
}

/// Sum rate of `user` over the PRBs assigned to it.
pub fn user_rate(slot: &ChannelSlot, alloc: &Allocation, user: usize) -> f64 {
    alloc
        .assignment()
        .iter()
        .enumerate()
        .filter(|(_, &owner)| owner == user)
        .map(|(prb, _)| slot.rate(user, prb))
        .sum()
}

/// Rates of all users in one pass over the PRBs.
pub fn user_rates(slot: &ChannelSlot, alloc: &Allocation) -> Vec<f64> {
    let mut rates = vec![0.0; slot.num_users()];
    for (prb, &owner) in alloc.assignment().iter().enumerate() {
        rates[owner] += slot.rate(owner, prb);
    }
    rates
}
