use crate::error::{Error, Result};

/// Adaptive-moment optimizer with bias correction over a flat view of the
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// Applies one update. A non-finite gradient rejects the whole step and
    /// leaves parameters and moments untouched.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        let total: usize = grads.iter().map(|g| g.len()).sum();
        if total != self.m.len() || params.iter().map(|p| p.len()).sum::<usize>() != total {
            return Err(Error::DimensionMismatch {
                context: "optimizer parameters",
                expected: self.m.len(),
                got: total,
            });
        }
        if let Some((slice, idx)) = grads
            .iter()
            .enumerate()
            .find_map(|(s, g)| g.iter().position(|x| !x.is_finite()).map(|i| (s, i)))
        {
            return Err(Error::NonFinite(format!(
                "gradient entry {idx} of tensor {slice} is {}",
                grads[slice][idx]
            )));
        }
        self.steps += 1;
        let bc1 = 1.0 - self.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - self.beta2.powi(self.steps as i32);
        let mut k = 0;
        for (p, g) in params.into_iter().zip(grads) {
            for (w, &gi) in p.iter_mut().zip(g) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * gi;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * gi * gi;
                let m_hat = self.m[k] / bc1;
                let v_hat = self.v[k] / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
        Ok(())
    }
}

pub fn grad_norm(grads: &[&[f64]]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Rescales gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_grad_norm(grads: Vec<&mut [f64]>, max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() && max_norm > 0.0 {
        let factor = max_norm / norm;
        for g in grads {
            for x in g {
                *x *= factor;
            }
        }
    }
    norm
}
