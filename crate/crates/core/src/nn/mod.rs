//! Small dense networks with hand-written backpropagation.
//!
//! Everything is `f64` and single-sample; the agents update from one
//! transition (A2C) or a small replay batch (DQN) per step, so batching
//! inside the network would buy little.

mod checkpoint;
pub mod gradcheck;
mod optim;

pub use checkpoint::{decode_networks, encode_networks, load_networks, save_networks, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use optim::{clip_grad_norm, grad_norm, Adam};

use rand::Rng;

use crate::config::Activation;
use crate::error::{Error, Result};

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Glorot-uniform weights times `scale`, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, scale: f64, rng: &mut R) -> Self {
        let limit = scale * (6.0 / (inputs + outputs) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs, activation);
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..=limit);
        }
        layer
    }

    fn forward_into(&self, x: &[f64], z: &mut Vec<f64>, a: &mut Vec<f64>) {
        z.clear();
        a.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let pre = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            z.push(pre);
            a.push(self.activation.apply(pre));
        }
    }
}

/// Gradients shaped like a [`Dense`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer inputs and pre-activations cached by [`Mlp::forward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<DenseGrad>,
}

impl MlpGrad {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn add_assign(&mut self, other: &MlpGrad) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            for x in s {
                *x *= factor;
            }
        }
    }
}

impl Mlp {
    /// `sizes` lists every width including input and output. Hidden layers
    /// use `hidden_act`, the last layer `out_act`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_act: Activation,
        out_act: Activation,
        scale: f64,
        out_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let last = i + 1 == n;
                let (act, s) = if last { (out_act, out_scale) } else { (hidden_act, scale) };
                Dense::init(sizes[i], sizes[i + 1], act, s, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Checkpoint("network without layers".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch {
                    context: "consecutive layers",
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::DimensionMismatch {
                    context: "layer parameters",
                    expected: l.inputs * l.outputs,
                    got: l.weights.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    /// Mutable access to parameter `k` in flat order (per layer: weights,
    /// then bias).
    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for layer in &mut self.layers {
            if k < layer.weights.len() {
                return &mut layer.weights[k];
            }
            k -= layer.weights.len();
            if k < layer.bias.len() {
                return &mut layer.bias[k];
            }
            k -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn zero_grad(&self) -> MlpGrad {
        MlpGrad {
            layers: self
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut trace = ForwardTrace::default();
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.outputs);
            let mut a = Vec::with_capacity(layer.outputs);
            layer.forward_into(&x, &mut z, &mut a);
            trace.inputs.push(std::mem::replace(&mut x, a.clone()));
            trace.pre.push(z);
            trace.post.push(a);
        }
        Ok(trace)
    }

    /// Output only, without keeping a trace.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.post.pop().unwrap_or_default())
    }

    /// Accumulates into `grad` the parameter gradients for the loss whose
    /// gradient with respect to the network output is `grad_out`, and
    /// returns the gradient with respect to the input.
    pub fn backward_into(&self, trace: &ForwardTrace, grad_out: &[f64], grad: &mut MlpGrad) -> Result<Vec<f64>> {
        if trace.pre.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "trace depth",
                expected: self.layers.len(),
                got: trace.pre.len(),
            });
        }
        if grad_out.len() != self.output_len() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_len(),
                got: grad_out.len(),
            });
        }
        let mut upstream = grad_out.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let x = &trace.inputs[k];
            let g = &mut grad.layers[k];
            let mut down = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let dz = upstream[o] * layer.activation.derivative(trace.pre[k][o], trace.post[k][o]);
                if dz == 0.0 {
                    continue;
                }
                g.bias[o] += dz;
                let row = o * layer.inputs;
                for i in 0..layer.inputs {
                    g.weights[row + i] += dz * x[i];
                    down[i] += dz * layer.weights[row + i];
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    pub fn backward(&self, trace: &ForwardTrace, grad_out: &[f64]) -> Result<MlpGrad> {
        let mut grad = self.zero_grad();
        self.backward_into(trace, grad_out, &mut grad)?;
        Ok(grad)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Log-probabilities via log-sum-exp.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Result of sampling a categorical head.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalSample {
    pub index: usize,
    pub log_prob: f64,
    pub probs: Vec<f64>,
}

/// Samples an index by inverse CDF with a single uniform draw.
pub fn softmax_categorical<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> CategoricalSample {
    let probs = softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut index = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            index = i;
            break;
        }
    }
    let log_prob = log_softmax(logits)[index];
    CategoricalSample { index, log_prob, probs }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Gradient with respect to the logits of
/// `-advantage * log pi(action) - entropy_coef * H(pi)`.
pub fn policy_logit_grad(probs: &[f64], action: usize, advantage: f64, entropy_coef: f64) -> Vec<f64> {
    let h = entropy(probs);
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let onehot = if k == action { 1.0 } else { 0.0 };
            let pg = -advantage * (onehot - p);
            let ent = if p > 0.0 { entropy_coef * p * (p.ln() + h) } else { 0.0 };
            pg + ent
        })
        .collect()
}

/// Actor-critic network: trunk, two categorical policy heads and a value
/// head. With a shared trunk the value head reads the actor trunk;
/// otherwise the critic has a trunk of its own.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub trunk: Mlp,
    pub critic_trunk: Option<Mlp>,
    pub head_hrllc: Mlp,
    pub head_embb: Mlp,
    pub value: Mlp,
}

/// Forward pass of an [`ActorCritic`] with all traces kept for backprop.
#[derive(Debug, Clone)]
pub struct ActorCriticOutput {
    pub logits_hrllc: Vec<f64>,
    pub logits_embb: Vec<f64>,
    pub value: f64,
    trunk: ForwardTrace,
    critic_trunk: Option<ForwardTrace>,
    head_hrllc: ForwardTrace,
    head_embb: ForwardTrace,
    value_trace: ForwardTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticGrad {
    pub trunk: MlpGrad,
    pub critic_trunk: Option<MlpGrad>,
    pub head_hrllc: MlpGrad,
    pub head_embb: MlpGrad,
    pub value: MlpGrad,
}

impl ActorCriticGrad {
    /// Actor-side slices (trunk and policy heads).
    pub fn actor_slices(&self) -> Vec<&[f64]> {
        let mut s = self.trunk.slices();
        s.extend(self.head_hrllc.slices());
        s.extend(self.head_embb.slices());
        s
    }

    pub fn critic_slices(&self) -> Vec<&[f64]> {
        let mut s = self.value.slices();
        if let Some(c) = &self.critic_trunk {
            s.extend(c.slices());
        }
        s
    }

    pub fn all_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.trunk.slices_mut();
        s.extend(self.head_hrllc.slices_mut());
        s.extend(self.head_embb.slices_mut());
        s.extend(self.value.slices_mut());
        if let Some(c) = &mut self.critic_trunk {
            s.extend(c.slices_mut());
        }
        s
    }
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(
        obs_len: usize,
        hidden: &[usize],
        activation: Activation,
        shared_trunk: bool,
        hrllc_options: usize,
        embb_options: usize,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![obs_len];
        sizes.extend_from_slice(hidden);
        let width = *sizes.last().unwrap();
        let trunk = Mlp::new(&sizes, activation, activation, init_scale, init_scale, rng);
        let critic_trunk =
            (!shared_trunk).then(|| Mlp::new(&sizes, activation, activation, init_scale, init_scale, rng));
        // small policy heads start the policy close to uniform
        let head_hrllc = Mlp::new(&[width, hrllc_options], activation, Activation::Identity, 1.0, 0.01, rng);
        let head_embb = Mlp::new(&[width, embb_options], activation, Activation::Identity, 1.0, 0.01, rng);
        let value = Mlp::new(&[width, 1], activation, Activation::Identity, 1.0, init_scale, rng);
        Self {
            trunk,
            critic_trunk,
            head_hrllc,
            head_embb,
            value,
        }
    }

    pub fn shared_trunk(&self) -> bool {
        self.critic_trunk.is_none()
    }

    pub fn obs_len(&self) -> usize {
        self.trunk.input_len()
    }

    pub fn forward(&self, obs: &[f64]) -> Result<ActorCriticOutput> {
        let trunk = self.trunk.forward(obs)?;
        let features = trunk.output().to_vec();
        let head_hrllc = self.head_hrllc.forward(&features)?;
        let head_embb = self.head_embb.forward(&features)?;
        let critic_trunk = match &self.critic_trunk {
            Some(c) => Some(c.forward(obs)?),
            None => None,
        };
        let critic_features = critic_trunk.as_ref().map_or(features.as_slice(), |t| t.output());
        let value_trace = self.value.forward(critic_features)?;
        let out = ActorCriticOutput {
            logits_hrllc: head_hrllc.output().to_vec(),
            logits_embb: head_embb.output().to_vec(),
            value: value_trace.output()[0],
            trunk,
            critic_trunk,
            head_hrllc,
            head_embb,
            value_trace,
        };
        if !out.value.is_finite() || out.logits_hrllc.iter().chain(&out.logits_embb).any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("actor-critic output".into()));
        }
        Ok(out)
    }

    /// Value estimate only.
    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        match &self.critic_trunk {
            Some(c) => Ok(self.value.predict(&c.predict(obs)?)?[0]),
            None => Ok(self.value.predict(&self.trunk.predict(obs)?)?[0]),
        }
    }

    pub fn zero_grad(&self) -> ActorCriticGrad {
        ActorCriticGrad {
            trunk: self.trunk.zero_grad(),
            critic_trunk: self.critic_trunk.as_ref().map(Mlp::zero_grad),
            head_hrllc: self.head_hrllc.zero_grad(),
            head_embb: self.head_embb.zero_grad(),
            value: self.value.zero_grad(),
        }
    }

    /// Backpropagates output gradients for both heads and the value.
    pub fn backward(
        &self,
        out: &ActorCriticOutput,
        d_hrllc: &[f64],
        d_embb: &[f64],
        d_value: f64,
    ) -> Result<ActorCriticGrad> {
        let mut grad = self.zero_grad();
        let mut d_features = self.head_hrllc.backward_into(&out.head_hrllc, d_hrllc, &mut grad.head_hrllc)?;
        let d_e = self.head_embb.backward_into(&out.head_embb, d_embb, &mut grad.head_embb)?;
        for (a, b) in d_features.iter_mut().zip(&d_e) {
            *a += b;
        }
        let d_v = self.value.backward_into(&out.value_trace, &[d_value], &mut grad.value)?;
        match (&self.critic_trunk, &out.critic_trunk, &mut grad.critic_trunk) {
            (Some(net), Some(trace), Some(g)) => {
                net.backward_into(trace, &d_v, g)?;
            }
            _ => {
                for (a, b) in d_features.iter_mut().zip(&d_v) {
                    *a += b;
                }
            }
        }
        self.trunk.backward_into(&out.trunk, &d_features, &mut grad.trunk)?;
        Ok(grad)
    }

    /// Parameter `k` in the order trunk, HRLLC head, eMBB head, value
    /// head, critic trunk.
    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        let mut nets: Vec<&mut Mlp> = vec![&mut self.trunk, &mut self.head_hrllc, &mut self.head_embb, &mut self.value];
        if let Some(c) = &mut self.critic_trunk {
            nets.push(c);
        }
        for net in nets {
            let n = net.param_count();
            if k < n {
                return net.param_mut(k);
            }
            k -= n;
        }
        panic!("parameter index out of range");
    }

    pub fn actor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.trunk.slices_mut();
        s.extend(self.head_hrllc.slices_mut());
        s.extend(self.head_embb.slices_mut());
        s
    }

    pub fn critic_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut s = self.value.slices_mut();
        if let Some(c) = &mut self.critic_trunk {
            s.extend(c.slices_mut());
        }
        s
    }

    pub fn actor_param_count(&self) -> usize {
        self.trunk.param_count() + self.head_hrllc.param_count() + self.head_embb.param_count()
    }

    pub fn critic_param_count(&self) -> usize {
        self.value.param_count() + self.critic_trunk.as_ref().map_or(0, Mlp::param_count)
    }

    /// Networks in checkpoint order.
    pub fn networks(&self) -> Vec<&Mlp> {
        let mut v = vec![&self.trunk, &self.head_hrllc, &self.head_embb, &self.value];
        if let Some(c) = &self.critic_trunk {
            v.push(c);
        }
        v
    }

    pub fn from_networks(mut nets: Vec<Mlp>) -> Result<Self> {
        if nets.len() != 4 && nets.len() != 5 {
            return Err(Error::Checkpoint(format!(
                "actor-critic needs 4 or 5 networks, found {}",
                nets.len()
            )));
        }
        let critic_trunk = if nets.len() == 5 { nets.pop() } else { None };
        let value = nets.pop().unwrap();
        let head_embb = nets.pop().unwrap();
        let head_hrllc = nets.pop().unwrap();
        let trunk = nets.pop().unwrap();
        let width = trunk.output_len();
        let critic_width = critic_trunk.as_ref().map_or(width, Mlp::output_len);
        if head_hrllc.input_len() != width || head_embb.input_len() != width || value.input_len() != critic_width {
            return Err(Error::Checkpoint("head inputs do not match trunk width".into()));
        }
        if value.output_len() != 1 {
            return Err(Error::Checkpoint("value head must have one output".into()));
        }
        Ok(Self {
            trunk,
            critic_trunk,
            head_hrllc,
            head_embb,
            value,
        })
    }
}
