//! Adam with L2 weight decay and a cosine learning-rate decay.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Steps over which the rate decays to zero; 0 keeps it constant.
    pub decay_steps: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 2e-4,
            decay_steps: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    pub step: usize,
}

impl Adam {
    pub fn new(cfg: AdamConfig, len: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn current_lr(&self) -> f64 {
        if self.cfg.decay_steps == 0 {
            return self.cfg.lr;
        }
        let frac = (self.step as f64 / self.cfg.decay_steps as f64).min(1.0);
        0.5 * self.cfg.lr * (1.0 + (std::f64::consts::PI * frac).cos())
    }

    /// One update of `params` from `grad`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        let lr = self.current_lr();
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i] + c.weight_decay * params[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            if lr != 0.0 {
                params[i] -= lr * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let mut x = vec![3.0, -2.0];
        let mut opt = Adam::new(
            AdamConfig {
                lr: 0.1,
                weight_decay: 0.0,
                ..Default::default()
            },
            2,
        );
        for _ in 0..500 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.update(&mut x, &g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-2));
    }

    #[test]
    fn zero_rate_is_inert_and_cosine_ends_at_zero() {
        let mut x = vec![1.0];
        let mut opt = Adam::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            1,
        );
        opt.update(&mut x, &[5.0]);
        assert_eq!(x, vec![1.0]);
        let mut opt = Adam::new(
            AdamConfig {
                lr: 1.0,
                decay_steps: 10,
                ..Default::default()
            },
            1,
        );
        opt.step = 10;
        assert!(opt.current_lr().abs() < 1e-15);
    }
}
