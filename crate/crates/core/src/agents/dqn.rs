use rand::Rng;

use super::{observation_len, ActionSpace, Decision, Policy, PolicyKind, Transition, UpdateStats};
use crate::config::{Activation, DqnSettings, ScenarioConfig};
use crate::error::{Error, Result};
use crate::nn::{argmax, clip_grad_norm, decode_networks, encode_networks, Adam, Mlp};
use crate::rng::{stream, Purpose, SimRng};
use crate::schedulers::SchedulerContext;

/// Per-update diagnostics of the Q learner.
pub type DqnStats = UpdateStats;

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, n: usize, rng: &mut R) -> Vec<&'a Transition> {
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

/// Deep Q-network over the flattened joint action space with a replay
/// buffer, a periodically synced target network and linear epsilon decay.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub q: Mlp,
    pub target: Mlp,
    pub space: ActionSpace,
    pub replay: ReplayBuffer,
    settings: DqnSettings,
    gamma: f64,
    reward_scale: f64,
    opt: Adam,
    /// Environment steps seen while training.
    pub steps: u64,
    decay_steps: f64,
    training: bool,
    /// Fixed exploration rate overriding the schedule.
    pub epsilon_override: Option<f64>,
}

impl DqnAgent {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let mut rng = stream(cfg.master_seed, Purpose::Init, 1, 0);
        let space = ActionSpace::from_config(cfg);
        let mut sizes = vec![observation_len(cfg.num_embb, cfg.num_hrllc)];
        sizes.extend_from_slice(&cfg.nn.hidden);
        sizes.push(space.joint_count());
        let q = Mlp::new(&sizes, cfg.nn.activation, Activation::Identity, cfg.nn.init_scale, cfg.nn.init_scale, &mut rng);
        Self::with_net(cfg, q)
    }

    fn with_net(cfg: &ScenarioConfig, q: Mlp) -> Self {
        let total = (cfg.episodes * cfg.slots_per_episode) as f64;
        Self {
            target: q.clone(),
            opt: Adam::new(q.param_count(), cfg.dqn.lr),
            space: ActionSpace::from_config(cfg),
            replay: ReplayBuffer::new(cfg.dqn.replay_capacity),
            settings: cfg.dqn.clone(),
            gamma: cfg.gamma,
            reward_scale: cfg.a2c.reward_scale,
            steps: 0,
            decay_steps: (total * cfg.dqn.eps_decay_fraction).max(1.0),
            training: true,
            epsilon_override: None,
            q,
        }
    }

    pub fn from_checkpoint(cfg: &ScenarioConfig, bytes: &[u8]) -> Result<Self> {
        let mut nets = decode_networks(bytes)?;
        if nets.len() != 1 {
            return Err(Error::Checkpoint(format!("Q network file holds {} networks", nets.len())));
        }
        let q = nets.pop().unwrap();
        let space = ActionSpace::from_config(cfg);
        if q.input_len() != observation_len(cfg.num_embb, cfg.num_hrllc) || q.output_len() != space.joint_count() {
            return Err(Error::Checkpoint("network shape does not match the scenario".into()));
        }
        Ok(Self::with_net(cfg, q))
    }

    pub fn epsilon(&self) -> f64 {
        if let Some(e) = self.epsilon_override {
            return e;
        }
        if !self.training {
            return 0.0;
        }
        let s = &self.settings;
        let frac = (self.steps as f64 / self.decay_steps).min(1.0);
        s.eps_start + (s.eps_end - s.eps_start) * frac
    }

    /// Epsilon-greedy joint action index.
    pub fn select_joint(&self, obs: &[f64], rng: &mut SimRng) -> Result<usize> {
        let eps = self.epsilon();
        if eps > 0.0 && rng.random::<f64>() < eps {
            return Ok(rng.random_range(0..self.space.joint_count()));
        }
        Ok(argmax(&self.q.predict(obs)?))
    }

    /// One squared-error step on a replay minibatch.
    pub fn train_batch(&mut self, rng: &mut SimRng) -> Result<f64> {
        let batch: Vec<Transition> = self
            .replay
            .sample(self.settings.batch_size, rng)
            .into_iter()
            .cloned()
            .collect();
        let mut grad = self.q.zero_grad();
        let mut loss = 0.0;
        let n = batch.len() as f64;
        for t in &batch {
            let next = if t.terminal {
                0.0
            } else {
                self.target.predict(&t.next_obs)?.into_iter().fold(f64::NEG_INFINITY, f64::max)
            };
            let y = t.reward * self.reward_scale + self.gamma * next;
            let trace = self.q.forward(&t.obs)?;
            let a = self.space.joint_index(t.action);
            let err = trace.output()[a] - y;
            if !err.is_finite() {
                return Err(Error::NonFinite(format!("Q error for action {a}")));
            }
            loss += err * err / n;
            let mut d_out = vec![0.0; self.space.joint_count()];
            d_out[a] = 2.0 * err / n;
            self.q.backward_into(&trace, &d_out, &mut grad)?;
        }
        clip_grad_norm(grad.slices_mut(), self.settings.grad_clip);
        self.opt.step(self.q.slices_mut(), grad.slices())?;
        Ok(loss)
    }
}

impl Policy for DqnAgent {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Dqn
    }

    fn act(&mut self, obs: &[f64], ctx: &SchedulerContext, rng: &mut SimRng) -> Result<Decision> {
        let action = self.space.from_joint(self.select_joint(obs, rng)?);
        Ok(Decision {
            allocation: self.space.decode(action, ctx)?,
            action: Some(action),
        })
    }

    fn learn(&mut self, t: &Transition, rng: &mut SimRng) -> Result<Option<UpdateStats>> {
        if !self.training {
            return Ok(None);
        }
        self.replay.push(t.clone());
        self.steps += 1;
        let mut stats = UpdateStats {
            epsilon: self.epsilon(),
            ..Default::default()
        };
        let mut updated = false;
        if self.replay.len() >= self.settings.batch_size && self.steps.is_multiple_of(self.settings.train_every as u64) {
            stats.q_loss = self.train_batch(rng)?;
            updated = true;
        }
        if self.steps.is_multiple_of(self.settings.target_sync as u64) {
            self.target = self.q.clone();
        }
        Ok(updated.then_some(stats))
    }

    fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    fn checkpoint(&self) -> Option<Vec<u8>> {
        Some(encode_networks(&[&self.q]))
    }
}
