//! The per-slot closed loop and episode bookkeeping.
//!
//! Each slot runs, in order:
//!
//! 1. step the MMPP chains and read the dexterity indices,
//! 2. sample arrivals,
//! 3. draw the channel,
//! 4. build the observation (rates, drift and surrogate from the previous slot),
//! 5. let the policy act,
//! 6. decode and check the allocation,
//! 7. compute rates and service capacities,
//! 8. update the queues and collect HRLLC delays,
//! 9. compute the Lyapunov drift, cost, surrogate and reward,
//! 10. update the dual variable,
//! 11. let the policy learn from the transition that the new observation completes.
//!
//! Traffic and channel randomness come from streams keyed by the master
//! seed and the episode index only, so every policy sees identical arrivals
//! and fading for the same episode index.

use crate::agents::{encode_observation, reward, step_cost, Action, ObservationInput, Policy, PolicyKind, Transition, UpdateStats};
use crate::channel::{draw_channel, user_rates, ChannelSlot};
use crate::config::{DualCadence, ScenarioConfig, SurrogateUnits};
use crate::constraint::{surrogate_y, DualVariable, SurrogateParams};
use crate::error::{Error, Result};
use crate::queueing::{packet_delays, update_queue, Drift, LyapunovState, Slice, UserQueue};
use crate::rng::{stream, Purpose, SimRng};
use crate::schedulers::SchedulerContext;
use crate::traffic::{sample_embb_arrivals, sample_hrllc_arrivals, MmppChain};

/// Episode indices at or above this value are reserved for evaluation so
/// that evaluation traffic never replays a training episode.
pub const EVAL_EPISODE_BASE: u64 = 1 << 40;

/// Stream index of evaluation episode `episode` under evaluation seed `seed`.
pub fn eval_episode_index(seed: u64, episode: u64) -> u64 {
    EVAL_EPISODE_BASE + seed * (1 << 20) + episode
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub slot: u64,
    /// 1 (slow) or 2 (burst) per HRLLC user.
    pub mmpp_states: Vec<u8>,
    pub arrivals: Vec<u64>,
    pub dxi: Vec<f64>,
    pub action: Option<Action>,
    pub prb_counts: Vec<usize>,
    pub assignment: Vec<usize>,
    pub rates: Vec<f64>,
    pub departures: Vec<u64>,
    pub backlogs_before: Vec<u64>,
    pub backlogs_after: Vec<u64>,
    pub lyapunov: f64,
    pub drift: Drift,
    pub cost: f64,
    /// Surrogate per HRLLC user.
    pub y: Vec<f64>,
    pub y_mean: f64,
    /// Dual value used in this slot's reward.
    pub lambda: f64,
    pub reward: f64,
}

/// Per-user sums over a set of slots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserTotals {
    pub slots: u64,
    pub arrivals: Vec<u64>,
    pub departures: Vec<u64>,
    pub prbs: Vec<u64>,
    pub rate_sum: Vec<f64>,
}

impl UserTotals {
    fn new(users: usize) -> Self {
        Self {
            slots: 0,
            arrivals: vec![0; users],
            departures: vec![0; users],
            prbs: vec![0; users],
            rate_sum: vec![0.0; users],
        }
    }

    fn add(&mut self, s: &SlotScratch) {
        self.slots += 1;
        for u in 0..self.arrivals.len() {
            self.arrivals[u] += s.arrivals[u];
            self.departures[u] += s.departures[u];
            self.prbs[u] += s.counts[u] as u64;
            self.rate_sum[u] += s.rates[u];
        }
    }

    pub fn merge(&mut self, other: &UserTotals) {
        if self.arrivals.is_empty() {
            *self = other.clone();
            return;
        }
        self.slots += other.slots;
        for u in 0..self.arrivals.len() {
            self.arrivals[u] += other.arrivals[u];
            self.departures[u] += other.departures[u];
            self.prbs[u] += other.prbs[u];
            self.rate_sum[u] += other.rate_sum[u];
        }
    }

    /// Per-slot means of arrivals, departures, PRBs and rate for `user`.
    pub fn means(&self, user: usize) -> (f64, f64, f64, f64) {
        let n = self.slots.max(1) as f64;
        (
            self.arrivals[user] as f64 / n,
            self.departures[user] as f64 / n,
            self.prbs[user] as f64 / n,
            self.rate_sum[user] / n,
        )
    }

    /// Totals over the slots in `self` but not in `part`.
    pub fn minus(&self, part: &UserTotals) -> UserTotals {
        let mut out = self.clone();
        out.slots -= part.slots;
        for u in 0..out.arrivals.len() {
            out.arrivals[u] -= part.arrivals[u];
            out.departures[u] -= part.departures[u];
            out.prbs[u] -= part.prbs[u];
            out.rate_sum[u] -= part.rate_sum[u];
        }
        out
    }
}

/// Complete result of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub policy: PolicyKind,
    /// Per-slot states; empty unless slot capture was requested.
    pub slots: Vec<SlotState>,
    pub rewards: Vec<f64>,
    pub episode_return: f64,
    /// Delay in seconds of every departed HRLLC packet, in departure order.
    pub hrllc_delays: Vec<f64>,
    pub totals: UserTotals,
    /// Totals restricted to the slots inside a two-step dexterity window.
    pub step_totals: UserTotals,
    pub initial_backlogs: Vec<u64>,
    pub final_backlogs: Vec<u64>,
    /// Mean per-user backlog over slots, by slice.
    pub mean_backlog_embb: f64,
    pub mean_backlog_hrllc: f64,
    /// Mean per-slot drift, by slice.
    pub mean_drift_embb: f64,
    pub mean_drift_hrllc: f64,
    pub mean_cost: f64,
    pub mean_y: f64,
    pub final_lambda: f64,
    /// Learner diagnostics averaged over the updates of this episode.
    pub learner: UpdateStats,
    pub updates: u64,
}

impl EpisodeRecord {
    pub fn num_slots(&self) -> usize {
        self.rewards.len()
    }
}

#[derive(Debug, Default)]
struct SlotScratch {
    arrivals: Vec<u64>,
    departures: Vec<u64>,
    counts: Vec<usize>,
    rates: Vec<f64>,
}

/// Simulation state that persists across slots of an episode (and, for the
/// dual variable, across episodes).
#[derive(Debug)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub dual: DualVariable,
    queues: Vec<UserQueue>,
    chains: Vec<MmppChain>,
    lyapunov: LyapunovState,
    traffic_rngs: Vec<SimRng>,
    channel_rng: SimRng,
    policy_rng: SimRng,
    surrogate: SurrogateParams,
    episode: u64,
    slot: u64,
    global_slot: u64,
    prev_rates: Vec<f64>,
    prev_drift: Drift,
    prev_y: f64,
    last_channel: Option<ChannelSlot>,
    pending: Option<(Vec<f64>, Action, f64)>,
    episode_y_sum: f64,
}

impl World {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let users = cfg.num_users();
        let queues = (0..users)
            .map(|u| UserQueue::new(if u < cfg.num_embb { Slice::Embb } else { Slice::Hrllc }))
            .collect();
        let c = &cfg.constraint;
        Ok(Self {
            dual: DualVariable::new(c.dual_init, cfg.dual_step, c.dual_decay, c.dual_max),
            queues,
            chains: Vec::new(),
            lyapunov: LyapunovState::new(&vec![0; cfg.num_hrllc], &vec![0; cfg.num_embb]),
            traffic_rngs: Vec::new(),
            channel_rng: stream(cfg.master_seed, Purpose::Channel, 0, 0),
            policy_rng: stream(cfg.master_seed, Purpose::Policy, 0, 0),
            surrogate: SurrogateParams {
                packet_bits: cfg.packet_size_bits as f64,
                d_max_s: cfg.d_max_s,
                d_proc_s: cfg.d_proc_s,
                chi_h: cfg.chi_h,
                exp_cap: c.exp_cap,
            },
            episode: 0,
            slot: 0,
            global_slot: 0,
            prev_rates: vec![0.0; users],
            prev_drift: Drift::default(),
            prev_y: 0.0,
            last_channel: None,
            pending: None,
            episode_y_sum: 0.0,
            cfg: cfg.clone(),
        })
    }

    pub fn backlogs(&self) -> Vec<u64> {
        self.queues.iter().map(UserQueue::backlog).collect()
    }

    /// Prepares episode `index`: fresh chains and rng streams, and cleared
    /// queues unless queue persistence is configured.
    pub fn begin_episode(&mut self, index: u64) -> Result<()> {
        let cfg = &self.cfg;
        let users = cfg.num_users();
        self.episode = index;
        self.slot = 0;
        self.traffic_rngs = (0..users)
            .map(|u| stream(cfg.master_seed, Purpose::Traffic, index, u as u64))
            .collect();
        self.chains = (0..cfg.num_hrllc)
            .map(|h| MmppChain::from_config(cfg, &mut self.traffic_rngs[cfg.num_embb + h]))
            .collect::<Result<_>>()?;
        self.channel_rng = stream(cfg.master_seed, Purpose::Channel, index, 0);
        self.policy_rng = stream(cfg.master_seed, Purpose::Policy, index, 0);
        if cfg.queue.reset_per_episode {
            self.queues.iter_mut().for_each(UserQueue::clear);
        }
        let b = self.backlogs();
        let (e, h) = b.split_at(cfg.num_embb);
        self.lyapunov = LyapunovState::new(h, e);
        self.prev_rates = vec![0.0; users];
        self.prev_drift = Drift::default();
        self.prev_y = 0.0;
        self.last_channel = None;
        self.pending = None;
        self.episode_y_sum = 0.0;
        Ok(())
    }

    fn dxi_now(&self) -> Vec<f64> {
        (0..self.cfg.num_hrllc)
            .map(|h| self.cfg.dexterity.dxi(h, self.slot as usize))
            .collect()
    }

    fn surrogate_for(&self, arrivals: u64, rate: f64, served: u64) -> f64 {
        match self.cfg.constraint.units {
            SurrogateUnits::Bits => {
                let offered = arrivals as f64 * self.surrogate.packet_bits / self.cfg.slot_duration_s;
                surrogate_y(offered, rate, &self.surrogate)
            }
            SurrogateUnits::Packets => surrogate_y(arrivals as f64, served as f64, &self.surrogate),
        }
    }

    /// Runs one slot. Returns the slot state, the learner update (if any)
    /// and the HRLLC packet delays of the slot.
    fn step(
        &mut self,
        policy: &mut dyn Policy,
        scratch: &mut SlotScratch,
        delays: &mut Vec<f64>,
    ) -> Result<(SlotState, Option<UpdateStats>)> {
        let cfg = self.cfg.clone();
        let ne = cfg.num_embb;
        let users = cfg.num_users();

        // 1-2: chains, dexterity, arrivals
        let mut mmpp_states = Vec::with_capacity(cfg.num_hrllc);
        for (h, chain) in self.chains.iter_mut().enumerate() {
            mmpp_states.push(chain.step(&mut self.traffic_rngs[ne + h]).index());
        }
        let dxi = self.dxi_now();
        let mut arrivals = Vec::with_capacity(users);
        for u in 0..users {
            let rng = &mut self.traffic_rngs[u];
            let a = if u < ne {
                sample_embb_arrivals(cfg.lambda_embb, rng)
            } else {
                sample_hrllc_arrivals(&self.chains[u - ne], cfg.beta_dex, dxi[u - ne], rng)
            };
            arrivals.push(a as u64);
        }

        // 3: channel
        let channel = draw_channel(&cfg, &mut self.channel_rng);

        // 4: observation
        let backlogs_before = self.backlogs();
        let pending: Vec<u64> = backlogs_before.iter().zip(&arrivals).map(|(b, a)| b + a).collect();
        let mean_gains: Vec<f64> = (0..users).map(|u| channel.mean_gain(u)).collect();
        let obs = encode_observation(
            &ObservationInput {
                pending: &pending,
                mean_gains: &mean_gains,
                prev_rates: &self.prev_rates,
                prev_drift: self.prev_drift,
                prev_y: self.prev_y,
                dxi: &dxi,
            },
            &cfg,
        );

        // 5-6: act and check
        let ctx = SchedulerContext {
            slot: self.slot,
            num_embb: ne,
            num_hrllc: cfg.num_hrllc,
            backlogs: &backlogs_before,
            arrivals: &arrivals,
            channel: &channel,
            dxi: &dxi,
        };
        let decision = policy.act(&obs, &ctx, &mut self.policy_rng)?;
        let alloc = decision.allocation;
        if let Err(e) = alloc.check(cfg.num_prbs, users) {
            return Err(Error::Invariant(format!(
                "{e} at episode {} slot {} (policy {}, counts {:?}, arrivals {:?}, backlogs {:?})",
                self.episode,
                self.slot,
                policy.kind().as_str(),
                alloc.counts(),
                arrivals,
                backlogs_before
            )));
        }

        // 7-8: service and queues
        let rates = user_rates(&channel, &alloc);
        let mut departures = Vec::with_capacity(users);
        let mut served_cap = Vec::with_capacity(users);
        for u in 0..users {
            let q = &mut self.queues[u];
            let served = q.service_packets(rates[u], cfg.slot_duration_s, cfg.packet_size_bits, cfg.queue.carry_service_credit);
            served_cap.push(served);
            let dep = update_queue(q, arrivals[u], served, self.global_slot);
            if u >= ne {
                delays.extend(packet_delays(&dep, self.global_slot, cfg.slot_duration_s, cfg.d_proc_s));
            }
            departures.push(dep.count);
        }
        let backlogs_after = self.backlogs();
        for u in 0..users {
            if backlogs_after[u] != backlogs_before[u] + arrivals[u] - departures[u] {
                return Err(Error::Invariant(format!(
                    "queue update broke conservation for user {u} at slot {}",
                    self.slot
                )));
            }
        }

        // 9: drift, cost, surrogate, reward
        let (e_after, h_after) = backlogs_after.split_at(ne);
        let drift = self.lyapunov.advance(h_after, e_after);
        let cost = step_cost(&rates, cfg.eps_cost);
        let y: Vec<f64> = (ne..users)
            .map(|u| self.surrogate_for(arrivals[u], rates[u], served_cap[u]))
            .collect();
        let y_mean = if y.is_empty() { 0.0 } else { y.iter().sum::<f64>() / y.len() as f64 };
        let lambda = self.dual.value;
        let r = reward(drift.total, cost, cfg.lyapunov_v, lambda, y_mean);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!(
                "reward at episode {} slot {} (drift {}, cost {cost}, y {y_mean})",
                self.episode, self.slot, drift.total
            )));
        }

        // 10: dual
        self.episode_y_sum += y_mean;
        if cfg.constraint.cadence == DualCadence::Slot {
            self.dual.update(y_mean);
        }

        // 11: learning
        policy.observe_rates(&rates);
        let mut stats = None;
        if let Some((prev_obs, prev_action, prev_reward)) = self.pending.take() {
            let t = Transition {
                obs: prev_obs,
                action: prev_action,
                reward: prev_reward,
                next_obs: obs.clone(),
                terminal: false,
            };
            stats = policy.learn(&t, &mut self.policy_rng)?;
        }
        if let Some(a) = decision.action {
            self.pending = Some((obs, a, r));
        }

        scratch.arrivals = arrivals.clone();
        scratch.departures = departures.clone();
        scratch.counts = alloc.counts().to_vec();
        scratch.rates = rates.clone();

        self.prev_rates = rates.clone();
        self.prev_drift = drift;
        self.prev_y = y_mean;
        self.last_channel = Some(channel);

        let state = SlotState {
            slot: self.slot,
            mmpp_states,
            arrivals,
            dxi,
            action: decision.action,
            prb_counts: alloc.counts().to_vec(),
            assignment: alloc.assignment().to_vec(),
            rates,
            departures,
            backlogs_before,
            backlogs_after,
            lyapunov: self.lyapunov.value,
            drift,
            cost,
            y,
            y_mean,
            lambda,
            reward: r,
        };
        self.slot += 1;
        self.global_slot += 1;
        Ok((state, stats))
    }

    /// Observation after the last slot of an episode, used to bootstrap the
    /// final transition.
    fn closing_observation(&self) -> Vec<f64> {
        let users = self.cfg.num_users();
        let backlogs = self.backlogs();
        let gains: Vec<f64> = match &self.last_channel {
            Some(c) => (0..users).map(|u| c.mean_gain(u)).collect(),
            None => vec![1.0; users],
        };
        encode_observation(
            &ObservationInput {
                pending: &backlogs,
                mean_gains: &gains,
                prev_rates: &self.prev_rates,
                prev_drift: self.prev_drift,
                prev_y: self.prev_y,
                dxi: &self.dxi_now(),
            },
            &self.cfg,
        )
    }

    /// Runs a whole episode with stream index `index`.
    pub fn run_episode(&mut self, policy: &mut dyn Policy, index: u64, slots: usize, keep_slots: bool) -> Result<EpisodeRecord> {
        self.begin_episode(index)?;
        policy.reset_episode();
        let cfg = self.cfg.clone();
        let users = cfg.num_users();
        let ne = cfg.num_embb;
        let initial_backlogs = self.backlogs();
        let mut record = EpisodeRecord {
            episode: index,
            policy: policy.kind(),
            slots: Vec::new(),
            rewards: Vec::with_capacity(slots),
            episode_return: 0.0,
            hrllc_delays: Vec::new(),
            totals: UserTotals::new(users),
            step_totals: UserTotals::new(users),
            initial_backlogs: initial_backlogs.clone(),
            final_backlogs: Vec::new(),
            mean_backlog_embb: 0.0,
            mean_backlog_hrllc: 0.0,
            mean_drift_embb: 0.0,
            mean_drift_hrllc: 0.0,
            mean_cost: 0.0,
            mean_y: 0.0,
            final_lambda: 0.0,
            learner: UpdateStats::default(),
            updates: 0,
        };
        let mut scratch = SlotScratch::default();
        let mut learner_sum = UpdateStats::default();
        let add_stats = |s: UpdateStats, sum: &mut UpdateStats, n: &mut u64| {
            sum.td_error += s.td_error;
            sum.actor_loss += s.actor_loss;
            sum.critic_loss += s.critic_loss;
            sum.entropy += s.entropy;
            sum.q_loss += s.q_loss;
            sum.epsilon += s.epsilon;
            *n += 1;
        };
        for _ in 0..slots {
            let in_step = cfg.dexterity.in_step(self.slot as usize);
            let (state, stats) = self.step(policy, &mut scratch, &mut record.hrllc_delays)?;
            if let Some(s) = stats {
                add_stats(s, &mut learner_sum, &mut record.updates);
            }
            record.totals.add(&scratch);
            if in_step {
                record.step_totals.add(&scratch);
            }
            record.episode_return += state.reward;
            record.rewards.push(state.reward);
            let (e, h) = state.backlogs_after.split_at(ne);
            record.mean_backlog_embb += e.iter().sum::<u64>() as f64 / ne.max(1) as f64;
            record.mean_backlog_hrllc += h.iter().sum::<u64>() as f64 / h.len().max(1) as f64;
            record.mean_drift_embb += state.drift.embb;
            record.mean_drift_hrllc += state.drift.hrllc;
            record.mean_cost += state.cost;
            record.mean_y += state.y_mean;
            if keep_slots {
                record.slots.push(state);
            }
        }
        if let Some((prev_obs, prev_action, prev_reward)) = self.pending.take() {
            let t = Transition {
                obs: prev_obs,
                action: prev_action,
                reward: prev_reward,
                next_obs: self.closing_observation(),
                terminal: false,
            };
            if let Some(s) = policy.learn(&t, &mut self.policy_rng)? {
                add_stats(s, &mut learner_sum, &mut record.updates);
            }
        }
        if cfg.constraint.cadence == DualCadence::Episode && slots > 0 {
            self.dual.update(self.episode_y_sum / slots as f64);
        }

        let n = slots.max(1) as f64;
        record.mean_backlog_embb /= n;
        record.mean_backlog_hrllc /= n;
        record.mean_drift_embb /= n;
        record.mean_drift_hrllc /= n;
        record.mean_cost /= n;
        record.mean_y /= n;
        record.final_lambda = self.dual.value;
        if record.updates > 0 {
            let k = record.updates as f64;
            record.learner = UpdateStats {
                td_error: learner_sum.td_error / k,
                actor_loss: learner_sum.actor_loss / k,
                critic_loss: learner_sum.critic_loss / k,
                entropy: learner_sum.entropy / k,
                q_loss: learner_sum.q_loss / k,
                epsilon: learner_sum.epsilon / k,
            };
        }
        record.final_backlogs = self.backlogs();
        check_conservation(&record)?;
        for q in &self.queues {
            if !q.is_consistent() {
                return Err(Error::Invariant(format!("queue run list inconsistent after episode {index}")));
            }
        }
        Ok(record)
    }
}

/// `initial + arrivals = departures + final` for every user.
pub fn check_conservation(record: &EpisodeRecord) -> Result<()> {
    for u in 0..record.final_backlogs.len() {
        let lhs = record.initial_backlogs[u] + record.totals.arrivals[u];
        let rhs = record.totals.departures[u] + record.final_backlogs[u];
        if lhs != rhs {
            return Err(Error::Invariant(format!(
                "conservation broken for user {u} in episode {}: {} + {} != {} + {}",
                record.episode, record.initial_backlogs[u], record.totals.arrivals[u], record.totals.departures[u], record.final_backlogs[u]
            )));
        }
    }
    Ok(())
}

/// Records and the trained policy of a training run.
pub struct TrainingRun {
    pub records: Vec<EpisodeRecord>,
    pub policy: Box<dyn Policy>,
    pub final_lambda: f64,
}

impl std::fmt::Debug for TrainingRun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainingRun")
            .field("episodes", &self.records.len())
            .field("policy", &self.policy.kind())
            .field("final_lambda", &self.final_lambda)
            .finish()
    }
}

impl TrainingRun {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.episode_return).collect()
    }
}

/// Trains `policy` for `cfg.episodes` episodes; `on_episode` sees every
/// record as it completes.
pub fn train_policy(
    cfg: &ScenarioConfig,
    mut policy: Box<dyn Policy>,
    keep_slots: bool,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainingRun> {
    let mut world = World::new(cfg)?;
    policy.set_training(true);
    let mut records = Vec::with_capacity(cfg.episodes);
    for ep in 0..cfg.episodes {
        let rec = world.run_episode(policy.as_mut(), ep as u64, cfg.slots_per_episode, keep_slots)?;
        on_episode(&rec);
        records.push(rec);
    }
    Ok(TrainingRun {
        records,
        policy,
        final_lambda: world.dual.value,
    })
}

/// Trains a fresh policy of `kind`.
pub fn run_training(cfg: &ScenarioConfig, kind: PolicyKind) -> Result<TrainingRun> {
    train_policy(cfg, crate::agents::build_policy(kind, cfg), false, |_| {})
}

/// Runs `episodes` frozen-policy episodes under evaluation seed `seed`.
pub fn evaluate(
    cfg: &ScenarioConfig,
    policy: &mut dyn Policy,
    seed: u64,
    episodes: usize,
    keep_slots: bool,
) -> Result<Vec<EpisodeRecord>> {
    let mut world = World::new(cfg)?;
    policy.set_training(false);
    (0..episodes)
        .map(|e| world.run_episode(policy, eval_episode_index(seed, e as u64), cfg.slots_per_episode, keep_slots))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{build_policy, A2cAgent, RrPolicy};

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.nn.hidden = vec![16, 16];
        cfg.episodes = 3;
        cfg.slots_per_episode = 50;
        cfg
    }

    #[test]
    fn empty_system_stays_empty() {
        let mut cfg = small();
        cfg.lambda_embb = 0.0;
        cfg.lambda_slow = 0.0;
        cfg.lambda_burst = 1e-12;
        let mut world = World::new(&cfg).unwrap();
        let mut policy = build_policy(PolicyKind::A2c, &cfg);
        let rec = world.run_episode(policy.as_mut(), 0, 100, true).unwrap();
        for s in &rec.slots {
            assert!(s.backlogs_after.iter().all(|&b| b == 0));
            assert_eq!(s.drift.total, 0.0);
        }
    }

    #[test]
    fn no_service_accumulates_arrivals() {
        let mut cfg = small();
        cfg.mean_snr_linear = 1e-12;
        let mut world = World::new(&cfg).unwrap();
        let mut policy = RrPolicy::new();
        let rec = world.run_episode(&mut policy, 0, 60, true).unwrap();
        for s in &rec.slots {
            for u in 0..7 {
                assert_eq!(s.backlogs_after[u], s.backlogs_before[u] + s.arrivals[u]);
            }
        }
        assert!(rec.hrllc_delays.is_empty());
    }

    #[test]
    fn zero_slot_episode() {
        let cfg = small();
        let mut world = World::new(&cfg).unwrap();
        let rec = world.run_episode(&mut RrPolicy::new(), 0, 0, true).unwrap();
        assert_eq!(rec.episode_return, 0.0);
        assert!(rec.slots.is_empty() && rec.rewards.is_empty());
    }

    #[test]
    fn return_is_sum_of_rewards_and_queues_reset() {
        let cfg = small();
        let mut world = World::new(&cfg).unwrap();
        let mut policy = build_policy(PolicyKind::ProportionalFair, &cfg);
        let a = world.run_episode(policy.as_mut(), 0, 80, true).unwrap();
        let sum: f64 = a.slots.iter().fold(0.0, |acc, s| acc + s.reward);
        assert_eq!(a.episode_return, sum);
        let b = world.run_episode(policy.as_mut(), 1, 80, true).unwrap();
        assert!(b.initial_backlogs.iter().all(|&q| q == 0));
        assert!(b.slots[0].backlogs_before.iter().all(|&q| q == 0));
        let delays: usize = a.totals.departures[4..].iter().sum::<u64>() as usize;
        assert_eq!(a.hrllc_delays.len(), delays);
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let cfg = small();
        let run = || {
            let mut world = World::new(&cfg).unwrap();
            let mut agent = A2cAgent::new(&cfg);
            (0..2)
                .map(|e| world.run_episode(&mut agent, e, 60, true).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn traffic_and_channel_do_not_depend_on_policy() {
        let cfg = small();
        let mut w1 = World::new(&cfg).unwrap();
        let mut w2 = World::new(&cfg).unwrap();
        let a = w1.run_episode(&mut RrPolicy::new(), 7, 60, true).unwrap();
        let mut pf = build_policy(PolicyKind::ProportionalFair, &cfg);
        let b = w2.run_episode(pf.as_mut(), 7, 60, true).unwrap();
        for (x, y) in a.slots.iter().zip(&b.slots) {
            assert_eq!(x.arrivals, y.arrivals);
            assert_eq!(x.mmpp_states, y.mmpp_states);
        }
    }

    #[test]
    fn training_runs_every_episode() {
        let mut cfg = small();
        cfg.episodes = 1;
        let run = run_training(&cfg, PolicyKind::A2c).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].updates, 50);
        let again = run_training(&cfg, PolicyKind::A2c).unwrap();
        assert_eq!(run.returns(), again.returns());
    }

    #[test]
    fn persistent_queues_keep_backlog() {
        let mut cfg = small();
        cfg.queue.reset_per_episode = false;
        cfg.mean_snr_linear = 1e-12;
        let mut world = World::new(&cfg).unwrap();
        let mut rr = RrPolicy::new();
        let a = world.run_episode(&mut rr, 0, 30, false).unwrap();
        let b = world.run_episode(&mut rr, 1, 30, false).unwrap();
        assert_eq!(b.initial_backlogs, a.final_backlogs);
        check_conservation(&b).unwrap();
    }
}
