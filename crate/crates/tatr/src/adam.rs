//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::tensor::Real;
use serde::{Deserialize, Serialize};

/// Hyperparameters. Defaults: lr 3e-4, beta1 0.9, beta2 0.999, eps 1e-8.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Per-parameter first/second moments and the step counter.
pub struct AdamState<F> {
    config: AdamConfig,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    t: u64,
}

impl<F: Real> AdamState<F> {
    /// One moment buffer per parameter tensor, sized from `sizes`.
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        AdamState {
            config,
            m: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
            v: sizes.iter().map(|&s| vec![F::zero(); s]).collect(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Apply one update. `params[i]` and `grads[i]` must match the size
    /// the state was built with.
    pub fn step(&mut self, params: &mut [&mut [F]], grads: &[Vec<F>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Invalid(format!(
                "adam step over {} params / {} grads, state has {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for i in 0..params.len() {
            if params[i].len() != self.m[i].len() || grads[i].len() != self.m[i].len() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: vec![params[i].len(), grads[i].len()],
                    right: vec![self.m[i].len()],
                });
            }
        }

        self.t += 1;
        let b1 = F::from_f64(self.config.beta1);
        let b2 = F::from_f64(self.config.beta2);
        let one = F::one();
        let lr = F::from_f64(self.config.lr);
        let eps = F::from_f64(self.config.epsilon);
        let bias1 = one - F::from_f64(self.config.beta1.powi(self.t as i32));
        let bias2 = one - F::from_f64(self.config.beta2.powi(self.t as i32));

        for (i, param) in params.iter_mut().enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            let g = &grads[i];
            for j in 0..param.len() {
                m[j] = b1 * m[j] + (one - b1) * g[j];
                v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                param[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
