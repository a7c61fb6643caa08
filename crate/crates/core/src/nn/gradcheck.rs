//! Central finite-difference checks of the analytic gradients.

use super::{entropy, log_softmax, softmax, policy_logit_grad, ActorCritic, Mlp};
use crate::error::Result;

/// Denominator floor of the relative error so that gradients that are
/// zero up to rounding do not produce spurious large ratios.
pub const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn perturb_each<T>(
    net: &mut T,
    analytic: &[f64],
    step: f64,
    param: impl Fn(&mut T, usize) -> &mut f64,
    loss: impl Fn(&T) -> Result<f64>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *param(net, k);
        *param(net, k) = orig + step;
        let plus = loss(net)?;
        *param(net, k) = orig - step;
        let minus = loss(net)?;
        *param(net, k) = orig;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * step)));
    }
    Ok(worst)
}

/// Worst relative error between backprop and central differences for the
/// scalar loss `sum_k weights[k] * output_k`.
pub fn check_mlp(net: &mut Mlp, input: &[f64], weights: &[f64], step: f64) -> Result<f64> {
    let trace = net.forward(input)?;
    let grad = net.backward(&trace, weights)?;
    let analytic: Vec<f64> = grad.slices().concat();
    perturb_each(net, &analytic, step, |n, k| n.param_mut(k), |n| {
        Ok(n.predict(input)?.iter().zip(weights).map(|(o, w)| o * w).sum())
    })
}

/// Fixed quantities of one actor-critic loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct A2cLossInputs {
    pub action_hrllc: usize,
    pub action_embb: usize,
    /// Target `R + gamma * V(s')`, held constant.
    pub target: f64,
    /// Advantage used by the actor term, held constant.
    pub advantage: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
}

/// `-adv * (log pi_h + log pi_e) - c_ent * (H_h + H_e) + c_v * (target - V)^2`.
pub fn a2c_loss(net: &ActorCritic, obs: &[f64], inp: &A2cLossInputs) -> Result<f64> {
    let out = net.forward(obs)?;
    let lh = log_softmax(&out.logits_hrllc);
    let le = log_softmax(&out.logits_embb);
    let h = entropy(&softmax(&out.logits_hrllc)) + entropy(&softmax(&out.logits_embb));
    let td = inp.target - out.value;
    Ok(-inp.advantage * (lh[inp.action_hrllc] + le[inp.action_embb]) - inp.entropy_coef * h
        + inp.value_coef * td * td)
}

/// Analytic gradient of [`a2c_loss`] via the same path the agent uses.
pub fn a2c_loss_grad(net: &ActorCritic, obs: &[f64], inp: &A2cLossInputs) -> Result<super::ActorCriticGrad> {
    let out = net.forward(obs)?;
    let d_h = policy_logit_grad(&softmax(&out.logits_hrllc), inp.action_hrllc, inp.advantage, inp.entropy_coef);
    let d_e = policy_logit_grad(&softmax(&out.logits_embb), inp.action_embb, inp.advantage, inp.entropy_coef);
    let d_v = -2.0 * inp.value_coef * (inp.target - out.value);
    net.backward(&out, &d_h, &d_e, d_v)
}

pub fn check_actor_critic(net: &mut ActorCritic, obs: &[f64], inp: &A2cLossInputs, step: f64) -> Result<f64> {
    let mut grad = a2c_loss_grad(net, obs, inp)?;
    let analytic: Vec<f64> = grad.all_slices_mut().into_iter().flat_map(|s| s.to_vec()).collect();
    perturb_each(net, &analytic, step, |n, k| n.param_mut(k), |n| a2c_loss(n, obs, inp))
}
