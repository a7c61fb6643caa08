use super::{Decision, Policy, PolicyKind};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::rng::SimRng;
use crate::schedulers::{ProportionalFair, RoundRobin, SchedulerContext};

/// Round-robin behind the policy interface. The cursor persists across
/// slots and episodes.
#[derive(Debug, Clone, Default)]
pub struct RrPolicy {
    pub inner: RoundRobin,
}

impl RrPolicy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for RrPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::RoundRobin
    }

    fn act(&mut self, _obs: &[f64], ctx: &SchedulerContext, _rng: &mut SimRng) -> Result<Decision> {
        Ok(Decision {
            allocation: self.inner.allocate(ctx.num_prbs(), ctx.num_users()),
            action: None,
        })
    }
}

/// Proportional-fair behind the policy interface; averages persist across
/// episodes.
#[derive(Debug, Clone)]
pub struct PfPolicy {
    pub inner: ProportionalFair,
}

impl PfPolicy {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            inner: ProportionalFair::new(cfg.num_users(), cfg.pf.ewma_factor, cfg.pf.ewma_init),
        }
    }
}

impl Policy for PfPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::ProportionalFair
    }

    fn act(&mut self, _obs: &[f64], ctx: &SchedulerContext, _rng: &mut SimRng) -> Result<Decision> {
        Ok(Decision {
            allocation: self.inner.allocate(ctx.channel),
            action: None,
        })
    }

    fn observe_rates(&mut self, rates: &[f64]) {
        self.inner.observe(rates);
    }
}
