//! Scenario configuration.
//!
//! Configs are flat `key = value` text files. `#` starts a comment, blank
//! lines are ignored and nested settings use dotted keys (`a2c.entropy_coef`).
//! A `[section]` line prefixes the keys that follow it, so
//!
//! ```text
//! [dqn]
//! batch_size = 32
//! ```
//!
//! is the same as `dqn.batch_size = 32`. Keys that are not set keep their
//! defaults. Every value is range-checked after loading; nothing is clamped.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How each HRLLC user's dexterity index evolves over the slots of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DexterityKind {
    /// Every HRLLC user holds `value`.
    Constant,
    /// User `i` holds `values[i]`.
    PerUser,
    /// User `user` holds `base`, steps to `peak` at `up_slot` and back to
    /// `base` at `down_slot`; all other users hold `base`.
    TwoStep,
}

impl DexterityKind {
    fn as_str(self) -> &'static str {
        match self {
            DexterityKind::Constant => "constant",
            DexterityKind::PerUser => "per_user",
            DexterityKind::TwoStep => "two_step",
        }
    }
}

impl FromStr for DexterityKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(DexterityKind::Constant),
            "per_user" => Ok(DexterityKind::PerUser),
            "two_step" => Ok(DexterityKind::TwoStep),
            other => Err(format!("unknown dexterity kind `{other}`")),
        }
    }
}

/// Slot-indexed dexterity schedule for the HRLLC users. Slot indices are
/// counted from the start of each episode.
#[derive(Debug, Clone, PartialEq)]
pub struct DexterityProfile {
    pub kind: DexterityKind,
    pub value: f64,
    pub values: Vec<f64>,
    pub user: usize,
    pub base: f64,
    pub peak: f64,
    pub up_slot: usize,
    pub down_slot: usize,
}

impl Default for DexterityProfile {
    fn default() -> Self {
        Self {
            kind: DexterityKind::Constant,
            value: 5.0,
            values: Vec::new(),
            user: 0,
            base: 2.5,
            peak: 7.5,
            up_slot: 67,
            down_slot: 134,
        }
    }
}

impl DexterityProfile {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: DexterityKind::Constant,
            value,
            ..Self::default()
        }
    }

    pub fn per_user(values: Vec<f64>) -> Self {
        Self {
            kind: DexterityKind::PerUser,
            values,
            ..Self::default()
        }
    }

    pub fn two_step(user: usize, base: f64, peak: f64, up_slot: usize, down_slot: usize) -> Self {
        Self {
            kind: DexterityKind::TwoStep,
            user,
            base,
            peak,
            up_slot,
            down_slot,
            ..Self::default()
        }
    }

    /// Dexterity index of HRLLC user `user` at slot `slot` of an episode.
    pub fn dxi(&self, user: usize, slot: usize) -> f64 {
        match self.kind {
            DexterityKind::Constant => self.value,
            DexterityKind::PerUser => self.values.get(user).copied().unwrap_or(0.0),
            DexterityKind::TwoStep => {
                if user == self.user && slot >= self.up_slot && slot < self.down_slot {
                    self.peak
                } else {
                    self.base
                }
            }
        }
    }

    /// Whether slot `slot` lies inside the raised segment of a two-step profile.
    pub fn in_step(&self, slot: usize) -> bool {
        self.kind == DexterityKind::TwoStep && slot >= self.up_slot && slot < self.down_slot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Units fed to the delay surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateUnits {
    /// Arrivals and service as bit rates (bits/s), so `(A - r) / p` is a
    /// packet rate and the exponent counts excess packets over the budget.
    Bits,
    /// Arrivals and floored service both in packets per slot.
    Packets,
}

impl SurrogateUnits {
    fn as_str(self) -> &'static str {
        match self {
            SurrogateUnits::Bits => "bits",
            SurrogateUnits::Packets => "packets",
        }
    }
}

impl FromStr for SurrogateUnits {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bits" => Ok(SurrogateUnits::Bits),
            "packets" => Ok(SurrogateUnits::Packets),
            other => Err(format!("unknown surrogate units `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualCadence {
    Slot,
    Episode,
}

impl DualCadence {
    fn as_str(self) -> &'static str {
        match self {
            DualCadence::Slot => "slot",
            DualCadence::Episode => "episode",
        }
    }
}

impl FromStr for DualCadence {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "slot" => Ok(DualCadence::Slot),
            "episode" => Ok(DualCadence::Episode),
            other => Err(format!("unknown dual cadence `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueSettings {
    /// Carry fractional service across slots instead of flooring it away.
    pub carry_service_credit: bool,
    pub reset_per_episode: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSettings {
    /// Step applied to the magnitude of a negative surrogate.
    pub dual_decay: f64,
    /// Upper end of the projection interval for the dual variable.
    pub dual_max: f64,
    pub dual_init: f64,
    /// Exponent cap inside the surrogate.
    pub exp_cap: f64,
    pub units: SurrogateUnits,
    pub cadence: DualCadence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetSettings {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub shared_trunk: bool,
    pub init_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct A2cSettings {
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub grad_clip: f64,
    /// Rewards are multiplied by this before entering the learner.
    pub reward_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnSettings {
    pub lr: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync: usize,
    pub train_every: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of all training slots over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    pub grad_clip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsSettings {
    pub q_ref: f64,
    pub r_ref: f64,
    pub l_ref: f64,
    pub y_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfSettings {
    pub ewma_factor: f64,
    pub ewma_init: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub episodes: usize,
    pub seeds: usize,
    pub greedy: bool,
    pub ma_window: usize,
}

/// Every constant that parameterizes a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub total_bandwidth_hz: f64,
    pub num_prbs: usize,
    pub num_embb: usize,
    pub num_hrllc: usize,
    pub slot_duration_s: f64,
    pub d_max_s: f64,
    pub d_proc_s: f64,
    pub chi_h: f64,
    pub mmpp_alpha: f64,
    pub mmpp_beta: f64,
    pub lambda_slow: f64,
    pub lambda_burst: f64,
    pub beta_dex: f64,
    pub lambda_embb: f64,
    pub packet_size_bits: u32,
    pub mean_snr_linear: f64,
    pub eps_cost: f64,
    pub lyapunov_v: f64,
    pub dual_step: f64,
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub episodes: usize,
    pub slots_per_episode: usize,
    pub master_seed: u64,
    /// Listed with the published parameters but never used by any computation.
    pub alpha_1: f64,
    pub dexterity: DexterityProfile,
    pub queue: QueueSettings,
    pub constraint: ConstraintSettings,
    pub nn: NetSettings,
    pub a2c: A2cSettings,
    pub dqn: DqnSettings,
    pub obs: ObsSettings,
    pub pf: PfSettings,
    pub eval: EvalSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            total_bandwidth_hz: 10e6,
            num_prbs: 25,
            num_embb: 4,
            num_hrllc: 3,
            slot_duration_s: 1e-3,
            d_max_s: 20e-3,
            d_proc_s: 5e-3,
            chi_h: 0.98,
            mmpp_alpha: 0.2,
            mmpp_beta: 0.2,
            lambda_slow: 2.0,
            lambda_burst: 8.0,
            beta_dex: 0.2,
            lambda_embb: 4.0,
            packet_size_bits: 1000,
            mean_snr_linear: 10.0,
            eps_cost: 1e-6,
            lyapunov_v: 1.0,
            dual_step: 0.01,
            gamma: 0.99,
            lr_actor: 1e-4,
            lr_critic: 1e-4,
            episodes: 300,
            slots_per_episode: 200,
            master_seed: 2026,
            alpha_1: 0.1,
            dexterity: DexterityProfile::default(),
            queue: QueueSettings {
                carry_service_credit: false,
                reset_per_episode: true,
            },
            constraint: ConstraintSettings {
                dual_decay: 0.01,
                dual_max: 1.0,
                dual_init: 0.0,
                exp_cap: 2.0,
                units: SurrogateUnits::Bits,
                cadence: DualCadence::Slot,
            },
            nn: NetSettings {
                hidden: vec![64, 64],
                activation: Activation::Tanh,
                shared_trunk: true,
                init_scale: 1.0,
            },
            a2c: A2cSettings {
                entropy_coef: 0.01,
                value_coef: 0.5,
                grad_clip: 5.0,
                reward_scale: 0.01,
            },
            dqn: DqnSettings {
                lr: 1e-4,
                replay_capacity: 10_000,
                batch_size: 64,
                target_sync: 500,
                train_every: 4,
                eps_start: 1.0,
                eps_end: 0.05,
                eps_decay_fraction: 0.5,
                grad_clip: 5.0,
            },
            obs: ObsSettings {
                q_ref: 20.0,
                r_ref: 10e6,
                l_ref: 100.0,
                y_cap: 10.0,
            },
            pf: PfSettings {
                ewma_factor: 0.1,
                ewma_init: 1.0,
            },
            eval: EvalSettings {
                episodes: 50,
                seeds: 5,
                greedy: true,
                ma_window: 10,
            },
        }
    }
}

/// Width of one PRB in Hz.
pub fn derive_prb_bandwidth(cfg: &ScenarioConfig) -> f64 {
    cfg.total_bandwidth_hz / cfg.num_prbs as f64
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::parse(&text)
}

fn parse_value<T: FromStr>(raw: &str) -> std::result::Result<T, String> {
    raw.parse::<T>()
        .map_err(|_| format!("cannot parse `{raw}` as {}", std::any::type_name::<T>()))
}

fn parse_list<T: FromStr>(raw: &str) -> std::result::Result<Vec<T>, String> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|s| parse_value(s.trim())).collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl ScenarioConfig {
    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines from `text` without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::ConfigParse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            let full_key = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !seen.insert(full_key.clone()) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    message: format!("duplicate key `{full_key}`"),
                });
            }
            self.set(&full_key, value.trim())
                .map_err(|message| Error::ConfigParse {
                    line: line_no,
                    message,
                })?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides (as given to `--set`) and re-validates.
    pub fn with_overrides<S: AsRef<str>>(mut self, overrides: &[S]) -> Result<Self> {
        for ov in overrides {
            let ov = ov.as_ref();
            let (key, value) = ov.split_once('=').ok_or_else(|| {
                Error::Usage(format!("override `{ov}` is not of the form key=value"))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| Error::Usage(format!("--set {ov}: {message}")))?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Sets a single key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "total_bandwidth_hz" => self.total_bandwidth_hz = parse_value(v)?,
            "num_prbs" => self.num_prbs = parse_value(v)?,
            "num_embb" => self.num_embb = parse_value(v)?,
            "num_hrllc" => self.num_hrllc = parse_value(v)?,
            "slot_duration_s" => self.slot_duration_s = parse_value(v)?,
            "d_max_s" => self.d_max_s = parse_value(v)?,
            "d_proc_s" => self.d_proc_s = parse_value(v)?,
            "chi_h" => self.chi_h = parse_value(v)?,
            "mmpp_alpha" => self.mmpp_alpha = parse_value(v)?,
            "mmpp_beta" => self.mmpp_beta = parse_value(v)?,
            "lambda_slow" => self.lambda_slow = parse_value(v)?,
            "lambda_burst" => self.lambda_burst = parse_value(v)?,
            "beta_dex" => self.beta_dex = parse_value(v)?,
            "lambda_embb" => self.lambda_embb = parse_value(v)?,
            "packet_size_bits" => self.packet_size_bits = parse_value(v)?,
            "mean_snr_linear" => self.mean_snr_linear = parse_value(v)?,
            "eps_cost" => self.eps_cost = parse_value(v)?,
            "lyapunov_v" => self.lyapunov_v = parse_value(v)?,
            "dual_step" => self.dual_step = parse_value(v)?,
            "gamma" => self.gamma = parse_value(v)?,
            "lr_actor" => self.lr_actor = parse_value(v)?,
            "lr_critic" => self.lr_critic = parse_value(v)?,
            "episodes" => self.episodes = parse_value(v)?,
            "slots_per_episode" => self.slots_per_episode = parse_value(v)?,
            "master_seed" => self.master_seed = parse_value(v)?,
            "alpha_1" => self.alpha_1 = parse_value(v)?,
            "dexterity.kind" => self.dexterity.kind = v.parse()?,
            "dexterity.value" => self.dexterity.value = parse_value(v)?,
            "dexterity.values" => self.dexterity.values = parse_list(v)?,
            "dexterity.user" => self.dexterity.user = parse_value(v)?,
            "dexterity.base" => self.dexterity.base = parse_value(v)?,
            "dexterity.peak" => self.dexterity.peak = parse_value(v)?,
            "dexterity.up_slot" => self.dexterity.up_slot = parse_value(v)?,
            "dexterity.down_slot" => self.dexterity.down_slot = parse_value(v)?,
            "queue.carry_service_credit" => self.queue.carry_service_credit = parse_value(v)?,
            "queue.reset_per_episode" => self.queue.reset_per_episode = parse_value(v)?,
            "constraint.dual_decay" => self.constraint.dual_decay = parse_value(v)?,
            "constraint.dual_max" => self.constraint.dual_max = parse_value(v)?,
            "constraint.dual_init" => self.constraint.dual_init = parse_value(v)?,
            "constraint.exp_cap" => self.constraint.exp_cap = parse_value(v)?,
            "constraint.units" => self.constraint.units = v.parse()?,
            "constraint.cadence" => self.constraint.cadence = v.parse()?,
            "nn.hidden" => self.nn.hidden = parse_list(v)?,
            "nn.activation" => self.nn.activation = v.parse()?,
            "nn.shared_trunk" => self.nn.shared_trunk = parse_value(v)?,
            "nn.init_scale" => self.nn.init_scale = parse_value(v)?,
            "a2c.entropy_coef" => self.a2c.entropy_coef = parse_value(v)?,
            "a2c.value_coef" => self.a2c.value_coef = parse_value(v)?,
            "a2c.grad_clip" => self.a2c.grad_clip = parse_value(v)?,
            "a2c.reward_scale" => self.a2c.reward_scale = parse_value(v)?,
            "dqn.lr" => self.dqn.lr = parse_value(v)?,
            "dqn.replay_capacity" => self.dqn.replay_capacity = parse_value(v)?,
            "dqn.batch_size" => self.dqn.batch_size = parse_value(v)?,
            "dqn.target_sync" => self.dqn.target_sync = parse_value(v)?,
            "dqn.train_every" => self.dqn.train_every = parse_value(v)?,
            "dqn.eps_start" => self.dqn.eps_start = parse_value(v)?,
            "dqn.eps_end" => self.dqn.eps_end = parse_value(v)?,
            "dqn.eps_decay_fraction" => self.dqn.eps_decay_fraction = parse_value(v)?,
            "dqn.grad_clip" => self.dqn.grad_clip = parse_value(v)?,
            "obs.q_ref" => self.obs.q_ref = parse_value(v)?,
            "obs.r_ref" => self.obs.r_ref = parse_value(v)?,
            "obs.l_ref" => self.obs.l_ref = parse_value(v)?,
            "obs.y_cap" => self.obs.y_cap = parse_value(v)?,
            "pf.ewma_factor" => self.pf.ewma_factor = parse_value(v)?,
            "pf.ewma_init" => self.pf.ewma_init = parse_value(v)?,
            "eval.episodes" => self.eval.episodes = parse_value(v)?,
            "eval.seeds" => self.eval.seeds = parse_value(v)?,
            "eval.greedy" => self.eval.greedy = parse_value(v)?,
            "eval.ma_window" => self.eval.ma_window = parse_value(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every field, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let d = &self.dexterity;
        vec![
            ("total_bandwidth_hz", self.total_bandwidth_hz.to_string()),
            ("num_prbs", self.num_prbs.to_string()),
            ("num_embb", self.num_embb.to_string()),
            ("num_hrllc", self.num_hrllc.to_string()),
            ("slot_duration_s", self.slot_duration_s.to_string()),
            ("d_max_s", self.d_max_s.to_string()),
            ("d_proc_s", self.d_proc_s.to_string()),
            ("chi_h", self.chi_h.to_string()),
            ("mmpp_alpha", self.mmpp_alpha.to_string()),
            ("mmpp_beta", self.mmpp_beta.to_string()),
            ("lambda_slow", self.lambda_slow.to_string()),
            ("lambda_burst", self.lambda_burst.to_string()),
            ("beta_dex", self.beta_dex.to_string()),
            ("lambda_embb", self.lambda_embb.to_string()),
            ("packet_size_bits", self.packet_size_bits.to_string()),
            ("mean_snr_linear", self.mean_snr_linear.to_string()),
            ("eps_cost", self.eps_cost.to_string()),
            ("lyapunov_v", self.lyapunov_v.to_string()),
            ("dual_step", self.dual_step.to_string()),
            ("gamma", self.gamma.to_string()),
            ("lr_actor", self.lr_actor.to_string()),
            ("lr_critic", self.lr_critic.to_string()),
            ("episodes", self.episodes.to_string()),
            ("slots_per_episode", self.slots_per_episode.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("alpha_1", self.alpha_1.to_string()),
            ("dexterity.kind", d.kind.as_str().to_string()),
            ("dexterity.value", d.value.to_string()),
            ("dexterity.values", join(&d.values)),
            ("dexterity.user", d.user.to_string()),
            ("dexterity.base", d.base.to_string()),
            ("dexterity.peak", d.peak.to_string()),
            ("dexterity.up_slot", d.up_slot.to_string()),
            ("dexterity.down_slot", d.down_slot.to_string()),
            (
                "queue.carry_service_credit",
                self.queue.carry_service_credit.to_string(),
            ),
            (
                "queue.reset_per_episode",
                self.queue.reset_per_episode.to_string(),
            ),
            ("constraint.dual_decay", self.constraint.dual_decay.to_string()),
            ("constraint.dual_max", self.constraint.dual_max.to_string()),
            ("constraint.dual_init", self.constraint.dual_init.to_string()),
            ("constraint.exp_cap", self.constraint.exp_cap.to_string()),
            ("constraint.units", self.constraint.units.as_str().to_string()),
            (
                "constraint.cadence",
                self.constraint.cadence.as_str().to_string(),
            ),
            ("nn.hidden", join(&self.nn.hidden)),
            ("nn.activation", self.nn.activation.as_str().to_string()),
            ("nn.shared_trunk", self.nn.shared_trunk.to_string()),
            ("nn.init_scale", self.nn.init_scale.to_string()),
            ("a2c.entropy_coef", self.a2c.entropy_coef.to_string()),
            ("a2c.value_coef", self.a2c.value_coef.to_string()),
            ("a2c.grad_clip", self.a2c.grad_clip.to_string()),
            ("a2c.reward_scale", self.a2c.reward_scale.to_string()),
            ("dqn.lr", self.dqn.lr.to_string()),
            ("dqn.replay_capacity", self.dqn.replay_capacity.to_string()),
            ("dqn.batch_size", self.dqn.batch_size.to_string()),
            ("dqn.target_sync", self.dqn.target_sync.to_string()),
            ("dqn.train_every", self.dqn.train_every.to_string()),
            ("dqn.eps_start", self.dqn.eps_start.to_string()),
            ("dqn.eps_end", self.dqn.eps_end.to_string()),
            (
                "dqn.eps_decay_fraction",
                self.dqn.eps_decay_fraction.to_string(),
            ),
            ("dqn.grad_clip", self.dqn.grad_clip.to_string()),
            ("obs.q_ref", self.obs.q_ref.to_string()),
            ("obs.r_ref", self.obs.r_ref.to_string()),
            ("obs.l_ref", self.obs.l_ref.to_string()),
            ("obs.y_cap", self.obs.y_cap.to_string()),
            ("pf.ewma_factor", self.pf.ewma_factor.to_string()),
            ("pf.ewma_init", self.pf.ewma_init.to_string()),
            ("eval.episodes", self.eval.episodes.to_string()),
            ("eval.seeds", self.eval.seeds.to_string()),
            ("eval.greedy", self.eval.greedy.to_string()),
            ("eval.ma_window", self.eval.ma_window.to_string()),
        ]
    }

    /// Serializes to the config text format. `parse` of the output yields an
    /// identical config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn num_users(&self) -> usize {
        self.num_embb + self.num_hrllc
    }

    pub fn prb_bandwidth_hz(&self) -> f64 {
        derive_prb_bandwidth(self)
    }

    /// Checks every documented range. Returns the first violation.
    pub fn validate(&self) -> Result<()> {
        fn fail(msg: String) -> Result<()> {
            Err(Error::ConfigValidation(msg))
        }
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                fail(format!("{name} must be finite and > 0 (got {v})"))
            }
        }
        fn non_negative(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                fail(format!("{name} must be finite and >= 0 (got {v})"))
            }
        }
        fn open_unit(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                fail(format!("{name} must lie in (0, 1) (got {v})"))
            }
        }
        fn at_least_one(name: &str, v: usize) -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                fail(format!("{name} must be >= 1"))
            }
        }

        positive("total_bandwidth_hz", self.total_bandwidth_hz)?;
        at_least_one("num_prbs", self.num_prbs)?;
        if self.num_users() < 1 {
            return fail("num_embb + num_hrllc must be >= 1".into());
        }
        if self.num_prbs < self.num_users() {
            return fail(format!(
                "num_prbs ({}) < num_embb + num_hrllc ({}): cannot give every user one PRB",
                self.num_prbs,
                self.num_users()
            ));
        }
        positive("slot_duration_s", self.slot_duration_s)?;
        positive("d_max_s", self.d_max_s)?;
        non_negative("d_proc_s", self.d_proc_s)?;
        if self.d_proc_s >= self.d_max_s {
            return fail(format!(
                "d_proc_s ({}) must be < d_max_s ({})",
                self.d_proc_s, self.d_max_s
            ));
        }
        open_unit("chi_h", self.chi_h)?;
        non_negative("mmpp_alpha", self.mmpp_alpha)?;
        non_negative("mmpp_beta", self.mmpp_beta)?;
        if self.mmpp_alpha + self.mmpp_beta <= 0.0 {
            return fail("mmpp_alpha + mmpp_beta must be > 0".into());
        }
        non_negative("lambda_slow", self.lambda_slow)?;
        non_negative("lambda_burst", self.lambda_burst)?;
        if self.lambda_burst <= self.lambda_slow {
            return fail(format!(
                "lambda_burst ({}) must exceed lambda_slow ({})",
                self.lambda_burst, self.lambda_slow
            ));
        }
        non_negative("beta_dex", self.beta_dex)?;
        non_negative("lambda_embb", self.lambda_embb)?;
        if self.packet_size_bits == 0 {
            return fail("packet_size_bits must be >= 1".into());
        }
        positive("mean_snr_linear", self.mean_snr_linear)?;
        positive("eps_cost", self.eps_cost)?;
        positive("lyapunov_v", self.lyapunov_v)?;
        positive("dual_step", self.dual_step)?;
        open_unit("gamma", self.gamma)?;
        positive("lr_actor", self.lr_actor)?;
        positive("lr_critic", self.lr_critic)?;
        at_least_one("episodes", self.episodes)?;
        at_least_one("slots_per_episode", self.slots_per_episode)?;
        if !self.alpha_1.is_finite() {
            return fail("alpha_1 must be finite".into());
        }

        let d = &self.dexterity;
        match d.kind {
            DexterityKind::Constant => non_negative("dexterity.value", d.value)?,
            DexterityKind::PerUser => {
                if d.values.len() != self.num_hrllc {
                    return fail(format!(
                        "dexterity.values has {} entries, expected one per HRLLC user ({})",
                        d.values.len(),
                        self.num_hrllc
                    ));
                }
                for v in &d.values {
                    non_negative("dexterity.values", *v)?;
                }
            }
            DexterityKind::TwoStep => {
                non_negative("dexterity.base", d.base)?;
                non_negative("dexterity.peak", d.peak)?;
                if d.user >= self.num_hrllc {
                    return fail(format!(
                        "dexterity.user ({}) must index an HRLLC user (< {})",
                        d.user, self.num_hrllc
                    ));
                }
                if d.up_slot > d.down_slot {
                    return fail("dexterity.up_slot must be <= dexterity.down_slot".into());
                }
            }
        }

        non_negative("constraint.dual_decay", self.constraint.dual_decay)?;
        positive("constraint.dual_max", self.constraint.dual_max)?;
        non_negative("constraint.dual_init", self.constraint.dual_init)?;
        if self.constraint.dual_init > self.constraint.dual_max {
            return fail("constraint.dual_init must be <= constraint.dual_max".into());
        }
        positive("constraint.exp_cap", self.constraint.exp_cap)?;
        if self.constraint.exp_cap > 700.0 {
            return fail("constraint.exp_cap must be <= 700 to keep exp() finite".into());
        }

        if self.nn.hidden.is_empty() || self.nn.hidden.contains(&0) {
            return fail("nn.hidden must list at least one positive layer width".into());
        }
        positive("nn.init_scale", self.nn.init_scale)?;
        non_negative("a2c.entropy_coef", self.a2c.entropy_coef)?;
        positive("a2c.value_coef", self.a2c.value_coef)?;
        positive("a2c.grad_clip", self.a2c.grad_clip)?;
        positive("a2c.reward_scale", self.a2c.reward_scale)?;

        positive("dqn.lr", self.dqn.lr)?;
        at_least_one("dqn.replay_capacity", self.dqn.replay_capacity)?;
        at_least_one("dqn.batch_size", self.dqn.batch_size)?;
        if self.dqn.batch_size > self.dqn.replay_capacity {
            return fail("dqn.batch_size must be <= dqn.replay_capacity".into());
        }
        at_least_one("dqn.target_sync", self.dqn.target_sync)?;
        at_least_one("dqn.train_every", self.dqn.train_every)?;
        for (name, v) in [
            ("dqn.eps_start", self.dqn.eps_start),
            ("dqn.eps_end", self.dqn.eps_end),
            ("dqn.eps_decay_fraction", self.dqn.eps_decay_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1] (got {v})"));
            }
        }
        positive("dqn.grad_clip", self.dqn.grad_clip)?;

        positive("obs.q_ref", self.obs.q_ref)?;
        positive("obs.r_ref", self.obs.r_ref)?;
        positive("obs.l_ref", self.obs.l_ref)?;
        positive("obs.y_cap", self.obs.y_cap)?;

        if !(self.pf.ewma_factor > 0.0 && self.pf.ewma_factor <= 1.0) {
            return fail(format!(
                "pf.ewma_factor must lie in (0, 1] (got {})",
                self.pf.ewma_factor
            ));
        }
        positive("pf.ewma_init", self.pf.ewma_init)?;

        at_least_one("eval.episodes", self.eval.episodes)?;
        at_least_one("eval.seeds", self.eval.seeds)?;
        at_least_one("eval.ma_window", self.eval.ma_window)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ScenarioConfig::parse("").unwrap();
        assert_eq!(cfg.num_prbs, 25);
        assert_eq!(cfg.num_embb, 4);
        assert_eq!(cfg.num_hrllc, 3);
        assert_eq!(cfg.chi_h, 0.98);
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.d_max_s, 0.02);
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn too_few_prbs_rejected() {
        let err = ScenarioConfig::parse("num_prbs = 6\nnum_embb = 4\nnum_hrllc = 3\n").unwrap_err();
        match err {
            Error::ConfigValidation(msg) => assert!(msg.contains("num_prbs"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_mmpp_rates_rejected() {
        let err = ScenarioConfig::parse("lambda_slow = 5\nlambda_burst = 2\n").unwrap_err();
        match err {
            Error::ConfigValidation(msg) => assert!(msg.contains("lambda_burst"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("# header\nnum_prbs = 25\nnot a pair\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }), "{err:?}");
        let err = ScenarioConfig::parse("\n\nbogus_key = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }), "{err:?}");
        let err = ScenarioConfig::parse("num_prbs = twenty\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }), "{err:?}");
        let err = ScenarioConfig::parse("gamma = 0.9\ngamma = 0.8\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = ScenarioConfig::parse("[dqn]\nbatch_size = 32 # smaller\n[a2c]\nentropy_coef = 0.0\n")
            .unwrap();
        let b = ScenarioConfig::parse("dqn.batch_size = 32\na2c.entropy_coef = 0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dqn.batch_size, 32);
    }

    #[test]
    fn out_of_range_values_are_rejected_not_clamped() {
        for text in [
            "chi_h = 1.0",
            "chi_h = 0",
            "gamma = 1",
            "d_proc_s = 0.02",
            "mean_snr_linear = 0",
            "eps_cost = -1",
            "lyapunov_v = 0",
            "mmpp_alpha = -0.1",
            "mmpp_alpha = 0\nmmpp_beta = 0",
            "beta_dex = -1",
            "total_bandwidth_hz = nan",
            "dexterity.kind = per_user\ndexterity.values = 1, 2",
            "dexterity.kind = two_step\ndexterity.user = 3",
            "episodes = 0",
        ] {
            assert!(
                matches!(ScenarioConfig::parse(text), Err(Error::ConfigValidation(_))),
                "accepted: {text}"
            );
        }
    }

    #[test]
    fn overrides_apply_and_validate() {
        let cfg = ScenarioConfig::default()
            .with_overrides(&["num_prbs=30", "dexterity.kind=per_user", "dexterity.values=0,1,2"])
            .unwrap();
        assert_eq!(cfg.num_prbs, 30);
        assert_eq!(cfg.dexterity.dxi(2, 0), 2.0);
        assert!(ScenarioConfig::default().with_overrides(&["num_prbs=3"]).is_err());
        assert!(matches!(
            ScenarioConfig::default().with_overrides(&["nonsense"]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn prb_bandwidth() {
        let mut cfg = ScenarioConfig::default();
        assert_eq!(derive_prb_bandwidth(&cfg), 400_000.0);
        cfg.num_prbs = 1;
        cfg.num_embb = 1;
        cfg.num_hrllc = 0;
        assert_eq!(derive_prb_bandwidth(&cfg), 10e6);
        cfg.num_prbs = 25;
        cfg.total_bandwidth_hz = 20e6;
        assert_eq!(derive_prb_bandwidth(&cfg), 800_000.0);
    }

    #[test]
    fn two_step_profile_schedule() {
        let p = DexterityProfile::two_step(1, 2.0, 9.0, 10, 20);
        assert_eq!(p.dxi(1, 9), 2.0);
        assert_eq!(p.dxi(1, 10), 9.0);
        assert_eq!(p.dxi(1, 19), 9.0);
        assert_eq!(p.dxi(1, 20), 2.0);
        assert_eq!(p.dxi(0, 15), 2.0);
        assert!(p.in_step(15) && !p.in_step(20));
    }
}
