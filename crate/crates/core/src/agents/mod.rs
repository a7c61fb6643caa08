//! Observation encoding, the factored action space, the drift-plus-penalty
//! reward, and the scheduling policies.

mod a2c;
mod baselines;
mod dqn;

pub use a2c::{A2cAgent, A2cStats};
pub use baselines::{PfPolicy, RrPolicy};
pub use dqn::{DqnAgent, DqnStats, ReplayBuffer};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::queueing::Drift;
use crate::rng::SimRng;
use crate::schedulers::{allocation_from_counts, intra_slice_divide, Allocation, SchedulerContext};

/// How the eMBB slice's PRBs are split among its users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbbTemplate {
    Uniform,
    BacklogProportional,
    ChannelGreedy,
}

impl EmbbTemplate {
    pub const ALL: [EmbbTemplate; 3] = [
        EmbbTemplate::Uniform,
        EmbbTemplate::BacklogProportional,
        EmbbTemplate::ChannelGreedy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbbTemplate::Uniform => "uniform",
            EmbbTemplate::BacklogProportional => "backlog",
            EmbbTemplate::ChannelGreedy => "channel-greedy",
        }
    }
}

/// HRLLC slice size `k_h` in `n_h..=K - n_e` crossed with an eMBB template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub num_prbs: usize,
    pub num_embb: usize,
    pub num_hrllc: usize,
}

/// One joint action as head indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    /// Index into the HRLLC slice sizes; `k_h = n_h + hrllc`.
    pub hrllc: usize,
    /// Index into [`EmbbTemplate::ALL`].
    pub embb: usize,
}

impl ActionSpace {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            num_prbs: cfg.num_prbs,
            num_embb: cfg.num_embb,
            num_hrllc: cfg.num_hrllc,
        }
    }

    pub fn hrllc_options(&self) -> usize {
        self.num_prbs - self.num_embb - self.num_hrllc + 1
    }

    pub fn embb_options(&self) -> usize {
        EmbbTemplate::ALL.len()
    }

    pub fn joint_count(&self) -> usize {
        self.hrllc_options() * self.embb_options()
    }

    pub fn hrllc_prbs(&self, action: Action) -> usize {
        self.num_hrllc + action.hrllc
    }

    pub fn joint_index(&self, action: Action) -> usize {
        action.hrllc * self.embb_options() + action.embb
    }

    pub fn from_joint(&self, index: usize) -> Action {
        Action {
            hrllc: index / self.embb_options(),
            embb: index % self.embb_options(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.joint_count()).map(|i| self.from_joint(i))
    }

    /// Per-user PRB counts for `action` (users eMBB first).
    pub fn decode_counts(&self, action: Action, ctx: &SchedulerContext) -> Result<Vec<usize>> {
        if action.hrllc >= self.hrllc_options() || action.embb >= self.embb_options() {
            return Err(Error::Invariant(format!("action {action:?} outside the action space")));
        }
        let k_h = self.hrllc_prbs(action);
        let k_e = self.num_prbs - k_h;
        let ne = self.num_embb;
        let hrllc_w: Vec<f64> = (ne..ne + self.num_hrllc).map(|u| ctx.pending(u) as f64).collect();
        let embb_w: Vec<f64> = match EmbbTemplate::ALL[action.embb] {
            EmbbTemplate::Uniform => vec![1.0; ne],
            EmbbTemplate::BacklogProportional => (0..ne).map(|u| ctx.pending(u) as f64).collect(),
            EmbbTemplate::ChannelGreedy => {
                let gains: Vec<f64> = (0..ne).map(|u| ctx.channel.mean_gain(u)).collect();
                let best = crate::nn::argmax(&gains);
                (0..ne).map(|u| if u == best { 1.0 } else { 0.0 }).collect()
            }
        };
        let mut counts = intra_slice_divide(k_e, &embb_w);
        counts.extend(intra_slice_divide(k_h, &hrllc_w));
        Ok(counts)
    }

    pub fn decode(&self, action: Action, ctx: &SchedulerContext) -> Result<Allocation> {
        let counts = self.decode_counts(action, ctx)?;
        Ok(allocation_from_counts(&counts, ctx.channel))
    }
}

/// What the learning agents see, before normalization.
#[derive(Debug, Clone, Copy)]
pub struct ObservationInput<'a> {
    /// Backlog plus this slot's arrivals, per user (eMBB first).
    pub pending: &'a [u64],
    /// Mean channel gain per user over all PRBs this slot.
    pub mean_gains: &'a [f64],
    /// Rates achieved in the previous slot, bits/s.
    pub prev_rates: &'a [f64],
    pub prev_drift: Drift,
    /// Mean HRLLC surrogate of the previous slot.
    pub prev_y: f64,
    pub dxi: &'a [f64],
}

/// Observation length: per eMBB user (queue, gain, rate), eMBB drift, per
/// HRLLC user (queue, gain, rate), HRLLC drift, surrogate, per HRLLC DXI.
pub fn observation_len(num_embb: usize, num_hrllc: usize) -> usize {
    3 * num_embb + 1 + 3 * num_hrllc + 1 + 1 + num_hrllc
}

/// Builds the normalized observation vector. Queues scale by `1/q_ref`,
/// rates by `1/r_ref`, drift by `1/l_ref`; the surrogate is clipped to
/// `[-1, y_cap]`; gains and DXI are raw.
pub fn encode_observation(input: &ObservationInput, cfg: &ScenarioConfig) -> Vec<f64> {
    let o = &cfg.obs;
    let ne = cfg.num_embb;
    let users = cfg.num_users();
    let mut v = Vec::with_capacity(observation_len(ne, cfg.num_hrllc));
    let block = |range: std::ops::Range<usize>, v: &mut Vec<f64>| {
        v.extend(range.clone().map(|u| input.pending[u] as f64 / o.q_ref));
        v.extend(range.clone().map(|u| input.mean_gains[u]));
        v.extend(range.map(|u| input.prev_rates[u] / o.r_ref));
    };
    block(0..ne, &mut v);
    v.push(input.prev_drift.embb / o.l_ref);
    block(ne..users, &mut v);
    v.push(input.prev_drift.hrllc / o.l_ref);
    v.push(input.prev_y.clamp(-1.0, o.y_cap));
    v.extend_from_slice(input.dxi);
    v
}

/// `sum 1 / (r^2 + eps)` with rates converted to Mbit/s.
pub fn step_cost(rates_bits: &[f64], eps: f64) -> f64 {
    rates_bits
        .iter()
        .map(|r| {
            let m = r / 1e6;
            1.0 / (m * m + eps)
        })
        .sum()
}

/// `-(drift + V h + lambda max(y, 0))`.
pub fn reward(drift: f64, cost: f64, v: f64, lambda: f64, y: f64) -> f64 {
    -(drift + v * cost + lambda * y.max(0.0))
}

/// One-step experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// Episodes end by truncation, so the engine never sets this; it exists
    /// for callers that model true terminal states.
    pub terminal: bool,
}

/// Learner diagnostics from one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub td_error: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub q_loss: f64,
    pub epsilon: f64,
}

/// Output of a policy for one slot.
#[derive(Debug, Clone)]
pub struct Decision {
    pub allocation: Allocation,
    pub action: Option<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    A2c,
    Dqn,
    RoundRobin,
    ProportionalFair,
}

impl PolicyKind {
    /// Name used on the command line and in output files.
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::A2c => "drastic",
            PolicyKind::Dqn => "dqn",
            PolicyKind::RoundRobin => "rr",
            PolicyKind::ProportionalFair => "pf",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "drastic" | "a2c" => Some(PolicyKind::A2c),
            "dqn" => Some(PolicyKind::Dqn),
            "rr" => Some(PolicyKind::RoundRobin),
            "pf" => Some(PolicyKind::ProportionalFair),
            _ => None,
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, PolicyKind::A2c | PolicyKind::Dqn)
    }
}

/// Common surface of every scheduler the engine can drive.
pub trait Policy {
    fn kind(&self) -> PolicyKind;

    fn act(&mut self, obs: &[f64], ctx: &SchedulerContext, rng: &mut SimRng) -> Result<Decision>;

    /// Rates achieved by the decision of the current slot.
    fn observe_rates(&mut self, _rates: &[f64]) {}

    fn learn(&mut self, _t: &Transition, _rng: &mut SimRng) -> Result<Option<UpdateStats>> {
        Ok(None)
    }

    /// Training mode samples and learns; evaluation mode is frozen.
    fn set_training(&mut self, _training: bool) {}

    fn reset_episode(&mut self) {}

    /// Parameter checkpoint bytes for learned policies.
    fn checkpoint(&self) -> Option<Vec<u8>> {
        None
    }
}

/// Builds a fresh policy of `kind` for `cfg`.
pub fn build_policy(kind: PolicyKind, cfg: &ScenarioConfig) -> Box<dyn Policy> {
    match kind {
        PolicyKind::A2c => Box::new(A2cAgent::new(cfg)),
        PolicyKind::Dqn => Box::new(DqnAgent::new(cfg)),
        PolicyKind::RoundRobin => Box::new(RrPolicy::new()),
        PolicyKind::ProportionalFair => Box::new(PfPolicy::new(cfg)),
    }
}

/// Restores a learned policy from checkpoint bytes.
pub fn load_policy(kind: PolicyKind, cfg: &ScenarioConfig, bytes: &[u8]) -> Result<Box<dyn Policy>> {
    match kind {
        PolicyKind::A2c => Ok(Box::new(A2cAgent::from_checkpoint(cfg, bytes)?)),
        PolicyKind::Dqn => Ok(Box::new(DqnAgent::from_checkpoint(cfg, bytes)?)),
        _ => Ok(build_policy(kind, cfg)),
    }
}

#[cfg(test)]
mod tests;
