use super::{observation_len, Action, ActionSpace, Decision, Policy, PolicyKind, Transition, UpdateStats};
use crate::config::{A2cSettings, ScenarioConfig};
use crate::error::{Error, Result};
use crate::nn::{
    argmax, clip_grad_norm, decode_networks, encode_networks, entropy, log_softmax, policy_logit_grad, softmax,
    softmax_categorical, ActorCritic, Adam,
};
use crate::rng::{stream, Purpose, SimRng};
use crate::schedulers::SchedulerContext;

/// Per-update diagnostics of the actor-critic learner.
pub type A2cStats = UpdateStats;

/// Two-head advantage actor-critic updated from every one-step transition.
#[derive(Debug, Clone)]
pub struct A2cAgent {
    pub net: ActorCritic,
    pub space: ActionSpace,
    settings: A2cSettings,
    gamma: f64,
    actor_opt: Adam,
    critic_opt: Adam,
    training: bool,
    greedy_eval: bool,
}

impl A2cAgent {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let mut rng = stream(cfg.master_seed, Purpose::Init, 0, 0);
        let space = ActionSpace::from_config(cfg);
        let net = ActorCritic::new(
            observation_len(cfg.num_embb, cfg.num_hrllc),
            &cfg.nn.hidden,
            cfg.nn.activation,
            cfg.nn.shared_trunk,
            space.hrllc_options(),
            space.embb_options(),
            cfg.nn.init_scale,
            &mut rng,
        );
        Self::with_net(cfg, net)
    }

    fn with_net(cfg: &ScenarioConfig, net: ActorCritic) -> Self {
        Self {
            actor_opt: Adam::new(net.actor_param_count(), cfg.lr_actor),
            critic_opt: Adam::new(net.critic_param_count(), cfg.lr_critic),
            space: ActionSpace::from_config(cfg),
            settings: cfg.a2c.clone(),
            gamma: cfg.gamma,
            training: true,
            greedy_eval: cfg.eval.greedy,
            net,
        }
    }

    pub fn from_checkpoint(cfg: &ScenarioConfig, bytes: &[u8]) -> Result<Self> {
        let net = ActorCritic::from_networks(decode_networks(bytes)?)?;
        let space = ActionSpace::from_config(cfg);
        if net.obs_len() != observation_len(cfg.num_embb, cfg.num_hrllc)
            || net.head_hrllc.output_len() != space.hrllc_options()
            || net.head_embb.output_len() != space.embb_options()
        {
            return Err(Error::Checkpoint("network shape does not match the scenario".into()));
        }
        Ok(Self::with_net(cfg, net))
    }

    /// Action probabilities of both heads for `obs`.
    pub fn policy(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let out = self.net.forward(obs)?;
        Ok((softmax(&out.logits_hrllc), softmax(&out.logits_embb)))
    }

    pub fn select(&self, obs: &[f64], rng: &mut SimRng) -> Result<Action> {
        let out = self.net.forward(obs)?;
        if !self.training && self.greedy_eval {
            return Ok(Action {
                hrllc: argmax(&out.logits_hrllc),
                embb: argmax(&out.logits_embb),
            });
        }
        let h = softmax_categorical(&out.logits_hrllc, rng);
        let e = softmax_categorical(&out.logits_embb, rng);
        Ok(Action {
            hrllc: h.index,
            embb: e.index,
        })
    }

    /// One actor-critic step on a single transition.
    pub fn update(&mut self, t: &Transition) -> Result<A2cStats> {
        let out = self.net.forward(&t.obs)?;
        let next_v = if t.terminal { 0.0 } else { self.net.value_of(&t.next_obs)? };
        let r = t.reward * self.settings.reward_scale;
        let td = r + self.gamma * next_v - out.value;
        if !td.is_finite() {
            return Err(Error::NonFinite(format!(
                "TD error (reward {r}, V(s) {}, V(s') {next_v})",
                out.value
            )));
        }
        let p_h = softmax(&out.logits_hrllc);
        let p_e = softmax(&out.logits_embb);
        let c = self.settings.entropy_coef;
        let d_h = policy_logit_grad(&p_h, t.action.hrllc, td, c);
        let d_e = policy_logit_grad(&p_e, t.action.embb, td, c);
        let vc = self.settings.value_coef;
        let mut grad = self.net.backward(&out, &d_h, &d_e, -2.0 * vc * td)?;
        clip_grad_norm(grad.all_slices_mut(), self.settings.grad_clip);

        let actor_grads = grad.actor_slices();
        let critic_grads = grad.critic_slices();
        self.actor_opt.step(self.net.actor_slices_mut(), actor_grads)?;
        self.critic_opt.step(self.net.critic_slices_mut(), critic_grads)?;

        let ent = entropy(&p_h) + entropy(&p_e);
        let logp = log_softmax(&out.logits_hrllc)[t.action.hrllc] + log_softmax(&out.logits_embb)[t.action.embb];
        Ok(A2cStats {
            td_error: td,
            actor_loss: -td * logp - c * ent,
            critic_loss: td * td,
            entropy: ent,
            ..Default::default()
        })
    }
}

impl Policy for A2cAgent {
    fn kind(&self) -> PolicyKind {
        PolicyKind::A2c
    }

    fn act(&mut self, obs: &[f64], ctx: &SchedulerContext, rng: &mut SimRng) -> Result<Decision> {
        let action = self.select(obs, rng)?;
        Ok(Decision {
            allocation: self.space.decode(action, ctx)?,
            action: Some(action),
        })
    }

    fn learn(&mut self, t: &Transition, _rng: &mut SimRng) -> Result<Option<UpdateStats>> {
        if !self.training {
            return Ok(None);
        }
        self.update(t).map(Some)
    }

    fn set_training(&mut self, training: bool) {
        self.training = training;
    }

    fn checkpoint(&self) -> Option<Vec<u8>> {
        Some(encode_networks(&self.net.networks()))
    }
}
