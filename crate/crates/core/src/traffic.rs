//! Packet arrival processes.
//!
//! eMBB users draw Poisson arrivals at a fixed rate. HRLLC users draw Poisson
//! arrivals whose intensity is set by a two-state Markov-modulated chain
//! (slow/bursty) and reduced linearly by the user's dexterity index.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Long-run state probabilities `(pi_1, pi_2)` of the two-state chain.
pub fn stationary_probs(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let total = alpha + beta;
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateChain);
    }
    Ok((beta / total, alpha / total))
}

/// Long-run mean arrival rate in packets per slot.
pub fn mean_rate(alpha: f64, beta: f64, lambda_slow: f64, lambda_burst: f64) -> Result<f64> {
    let (p1, p2) = stationary_probs(alpha, beta)?;
    Ok(p1 * lambda_slow + p2 * lambda_burst)
}

/// Arrival intensity after the dexterity reduction, floored at zero.
pub fn effective_intensity(lambda_state: f64, beta_dex: f64, dxi: f64) -> f64 {
    (lambda_state - beta_dex * dxi).max(0.0)
}

/// Poisson draw; `rand_distr` uses inversion for small means and
/// transformed rejection for large ones.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng);
    draw as u32
}

pub fn sample_embb_arrivals<R: Rng + ?Sized>(lambda_e: f64, rng: &mut R) -> u32 {
    sample_poisson(lambda_e, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmppState {
    Slow,
    Burst,
}

impl MmppState {
    /// 1 for the slow state, 2 for the bursty state.
    pub fn index(self) -> u8 {
        match self {
            MmppState::Slow => 1,
            MmppState::Burst => 2,
        }
    }
}

/// Slot-discretized two-state MMPP.
#[derive(Debug, Clone)]
pub struct MmppChain {
    pub state: MmppState,
    /// Slow -> burst rate, per second.
    pub alpha: f64,
    /// Burst -> slow rate, per second.
    pub beta: f64,
    pub lambda_slow: f64,
    pub lambda_burst: f64,
    pub slot_duration_s: f64,
}

impl MmppChain {
    pub fn new(
        state: MmppState,
        alpha: f64,
        beta: f64,
        lambda_slow: f64,
        lambda_burst: f64,
        slot_duration_s: f64,
    ) -> Self {
        Self {
            state,
            alpha,
            beta,
            lambda_slow,
            lambda_burst,
            slot_duration_s,
        }
    }

    /// Chain for an HRLLC user of `cfg`, starting in a state drawn from the
    /// stationary distribution.
    pub fn from_config<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        let (p_slow, _) = stationary_probs(cfg.mmpp_alpha, cfg.mmpp_beta)?;
        let state = if rng.random::<f64>() < p_slow {
            MmppState::Slow
        } else {
            MmppState::Burst
        };
        Ok(Self::new(
            state,
            cfg.mmpp_alpha,
            cfg.mmpp_beta,
            cfg.lambda_slow,
            cfg.lambda_burst,
            cfg.slot_duration_s,
        ))
    }

    /// Per-slot switching probabilities `(p_12, p_21)` from exponential
    /// holding times.
    pub fn transition_probs(&self) -> (f64, f64) {
        let p12 = 1.0 - (-self.alpha * self.slot_duration_s).exp();
        let p21 = 1.0 - (-self.beta * self.slot_duration_s).exp();
        (p12, p21)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> MmppState {
        let (p12, p21) = self.transition_probs();
        let u: f64 = rng.random();
        self.state = match self.state {
            MmppState::Slow if u < p12 => MmppState::Burst,
            MmppState::Burst if u < p21 => MmppState::Slow,
            s => s,
        };
        self.state
    }

    /// Intensity of the current state before any dexterity reduction.
    pub fn intensity(&self) -> f64 {
        match self.state {
            MmppState::Slow => self.lambda_slow,
            MmppState::Burst => self.lambda_burst,
        }
    }
}

pub fn sample_hrllc_arrivals<R: Rng + ?Sized>(
    chain: &MmppChain,
    beta_dex: f64,
    dxi: f64,
    rng: &mut R,
) -> u32 {
    sample_poisson(effective_intensity(chain.intensity(), beta_dex, dxi), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stationary_probabilities() {
        assert_eq!(stationary_probs(0.2, 0.2).unwrap(), (0.5, 0.5));
        let (p1, p2) = stationary_probs(0.3, 0.1).unwrap();
        assert!(close(p1, 0.25, 1e-15) && close(p2, 0.75, 1e-15));
        assert_eq!(stationary_probs(0.0, 0.5).unwrap(), (1.0, 0.0));
        assert!(matches!(stationary_probs(0.0, 0.0), Err(Error::DegenerateChain)));
    }

    #[test]
    fn long_run_mean_rate() {
        assert!(close(mean_rate(0.2, 0.2, 2.0, 8.0).unwrap(), 5.0, 1e-12));
        assert!(close(mean_rate(0.7, 0.05, 3.5, 3.5).unwrap(), 3.5, 1e-12));
        assert!(close(mean_rate(0.0, 0.4, 2.0, 8.0).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn dexterity_reduction() {
        assert!(close(effective_intensity(8.0, 0.2, 10.0), 6.0, 1e-12));
        assert_eq!(effective_intensity(8.0, 0.2, 0.0), 8.0);
        assert_eq!(effective_intensity(2.0, 0.5, 10.0), 0.0);
    }

    #[test]
    fn step_probabilities() {
        let mut rng = stream(1, Purpose::Traffic, 0, 0);
        let mut stuck = MmppChain::new(MmppState::Slow, 0.0, 0.3, 2.0, 8.0, 1e-3);
        for _ in 0..10_000 {
            assert_eq!(stuck.step(&mut rng), MmppState::Slow);
        }
        let mut fast = MmppChain::new(MmppState::Slow, f64::INFINITY, 0.0, 2.0, 8.0, 1e-3);
        assert_eq!(fast.step(&mut rng), MmppState::Burst);
        let chain = MmppChain::new(MmppState::Slow, 0.2, 0.2, 2.0, 8.0, 1e-3);
        let (p12, _) = chain.transition_probs();
        // 1 - exp(-2e-4) = 1.99980001e-4
        assert!(close(p12, 1.999_800_013_3e-4, 1e-13), "{p12}");
    }

    #[test]
    fn zero_intensity_never_arrives() {
        let mut rng = stream(2, Purpose::Traffic, 0, 0);
        let chain = MmppChain::new(MmppState::Slow, 0.2, 0.2, 0.0, 8.0, 1e-3);
        assert!((0..10_000).all(|_| sample_hrllc_arrivals(&chain, 0.2, 3.0, &mut rng) == 0));
        assert!((0..10_000).all(|_| sample_embb_arrivals(0.0, &mut rng) == 0));
    }

    fn moments(draws: &[u32]) -> (f64, f64) {
        let n = draws.len() as f64;
        let mean = draws.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = draws
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn hrllc_arrivals_are_poisson_with_reduced_mean() {
        let mut rng = stream(3, Purpose::Traffic, 0, 0);
        // intensity 8 - 0.3 * 10 = 5
        let chain = MmppChain::new(MmppState::Burst, 0.0, 0.0, 2.0, 8.0, 1e-3);
        let draws: Vec<u32> = (0..1_000_000)
            .map(|_| sample_hrllc_arrivals(&chain, 0.3, 10.0, &mut rng))
            .collect();
        let (mean, var) = moments(&draws);
        assert!(close(mean, 5.0, 0.05), "mean {mean}");
        assert!(close(var / mean, 1.0, 0.02), "dispersion {}", var / mean);
    }

    #[test]
    fn embb_arrival_mean_and_determinism() {
        let mut rng = stream(4, Purpose::Traffic, 0, 0);
        let draws: Vec<u32> = (0..1_000_000)
            .map(|_| sample_embb_arrivals(3.0, &mut rng))
            .collect();
        let (mean, _) = moments(&draws);
        assert!(close(mean, 3.0, 0.05), "mean {mean}");

        let mut a = stream(9, Purpose::Traffic, 1, 1);
        let mut b = stream(9, Purpose::Traffic, 1, 1);
        let xa: Vec<u32> = (0..1000).map(|_| sample_embb_arrivals(3.0, &mut a)).collect();
        let xb: Vec<u32> = (0..1000).map(|_| sample_embb_arrivals(3.0, &mut b)).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn large_means_use_the_rejection_path() {
        let mut rng = stream(5, Purpose::Traffic, 0, 0);
        let draws: Vec<u32> = (0..200_000).map(|_| sample_poisson(40.0, &mut rng)).collect();
        let (mean, var) = moments(&draws);
        assert!(close(mean, 40.0, 0.1), "mean {mean}");
        assert!(close(var / mean, 1.0, 0.03), "dispersion {}", var / mean);
    }

    #[test]
    fn fast_chain_occupancy_matches_stationary() {
        // Rates high enough that 10^6 slots span ~10^5 independent sojourns.
        let mut rng = stream(6, Purpose::Traffic, 0, 0);
        let (alpha, beta) = (150.0, 50.0);
        let mut chain = MmppChain::new(MmppState::Slow, alpha, beta, 2.0, 8.0, 1e-3);
        let slow = (0..1_000_000)
            .filter(|_| chain.step(&mut rng) == MmppState::Slow)
            .count() as f64
            / 1e6;
        let (p12, p21) = chain.transition_probs();
        let discrete = p21 / (p12 + p21);
        let (continuous, _) = stationary_probs(alpha, beta).unwrap();
        assert!(close(slow, discrete, 0.01), "{slow} vs {discrete}");
        assert!(close(slow, continuous, 0.02), "{slow} vs {continuous}");
    }

    proptest! {
        #[test]
        fn intensity_monotone(l in 0.0f64..20.0, b in 0.0f64..2.0, d1 in 0.0f64..20.0, d2 in 0.0f64..20.0, dl in 0.0f64..5.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(effective_intensity(l, b, hi) <= effective_intensity(l, b, lo));
            prop_assert!(effective_intensity(l + dl, b, lo) >= effective_intensity(l, b, lo));
            prop_assert!(effective_intensity(l, b, lo) >= 0.0);
        }
    }
}
