//! Per-objective clipped PPO with an entropy bonus and a value head.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::net::{backward, forward, DenoiserParams};
use crate::neural::optim::{Adam, AdamConfig};
use crate::neural::sampling::StepRule;
use crate::rl::buffer::{ReplayBuffer, Transition};
use crate::rl::critic::Critic;
use crate::rl::policy::{
    advantage, bit_entropy, clipped_surrogate, entropy_grad, logprob_grad, policy_logprob,
    surrogate_active,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub entropy_weight: f64,
    pub value_weight: f64,
    /// Pull of the previous global policy during distillation.
    pub anchor_weight: f64,
    pub clip: f64,
    pub gamma: f64,
    pub buffer_size: usize,
    pub iterations: usize,
    pub inference_steps: usize,
    pub step_rule: StepRule,
    pub policy_lr: f64,
    pub critic_lr: f64,
    pub distill_lr: f64,
    pub ppo_epochs: usize,
    pub minibatch: usize,
    pub distill_epochs: usize,
    pub critic_hidden: usize,
    /// Preference weights swept when refreshing the archive.
    pub archive_sweep: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            entropy_weight: 0.01,
            value_weight: 0.5,
            anchor_weight: 1.0,
            clip: 0.2,
            gamma: 0.99,
            buffer_size: 2048,
            iterations: 10,
            inference_steps: 3,
            step_rule: StepRule::Cosine,
            policy_lr: 1e-4,
            critic_lr: 1e-3,
            distill_lr: 1e-4,
            ppo_epochs: 2,
            minibatch: 64,
            distill_epochs: 2,
            critic_hidden: 32,
            archive_sweep: 11,
        }
    }
}

impl PpoConfig {
    pub fn desk() -> Self {
        PpoConfig::default()
    }

    pub fn paper() -> Self {
        PpoConfig {
            buffer_size: 50_000,
            iterations: 50,
            ..PpoConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        let weights = [
            self.entropy_weight,
            self.value_weight,
            self.anchor_weight,
            self.policy_lr,
            self.critic_lr,
            self.distill_lr,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("weights and learning rates must be finite and non-negative");
        }
        if self.inference_steps == 0 {
            return bad("inference_steps must be at least 1");
        }
        if self.minibatch == 0 || self.critic_hidden == 0 {
            return bad("minibatch and critic_hidden must be positive");
        }
        Ok(())
    }

    pub fn policy_adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.policy_lr,
            weight_decay: 0.0,
            ..AdamConfig::default()
        }
    }

    pub fn critic_adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.critic_lr,
            weight_decay: 0.0,
            ..AdamConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoReport {
    /// Mean of `-surrogate` over the last epoch.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
}

struct SampleGrad {
    surrogate: f64,
    entropy: f64,
    value_err: f64,
    ratio: f64,
    actor: Vec<f64>,
    critic: Vec<f64>,
}

fn sample_grad(
    actor: &DenoiserParams,
    critic: &Critic,
    tr: &Transition,
    objective: usize,
    cfg: &PpoConfig,
) -> Result<SampleGrad> {
    let trace = forward(actor, &tr.graph, &tr.state, tr.t)?;
    let n = trace.logits.len();
    let ratio = (policy_logprob(&trace.logits, &tr.action) - tr.behavior_logprob).exp();
    let target = tr.terminal_reward[objective];
    let mut critic_grad = vec![0.0; critic.data.len()];
    let v = critic.value(&tr.critic_input);
    let value_err = v - target;
    critic.backward(&tr.critic_input, 2.0 * cfg.value_weight * value_err, &mut critic_grad);
    let adv = advantage(target, v, tr.k, tr.horizon, cfg.gamma);
    let surrogate = clipped_surrogate(ratio, adv, cfg.clip);
    let active = surrogate_active(ratio, adv, cfg.clip);
    let inv_n = 1.0 / n.max(1) as f64;
    let mut entropy = 0.0;
    let dlogits: Vec<f64> = trace
        .logits
        .iter()
        .zip(&tr.action)
        .map(|(&z, &a)| {
            entropy += bit_entropy(z) * inv_n;
            let mut d = -cfg.entropy_weight * entropy_grad(z) * inv_n;
            if active {
                d -= adv * ratio * logprob_grad(z, a);
            }
            d
        })
        .collect();
    let mut actor_grad = vec![0.0; actor.len()];
    backward(actor, &tr.graph, &trace, &dlogits, &mut actor_grad);
    Ok(SampleGrad {
        surrogate,
        entropy,
        value_err,
        ratio,
        actor: actor_grad,
        critic: critic_grad,
    })
}

/// Minimizes `-surrogate - η₁·H + η₂·(V - r)²` for objective `objective`
/// over shuffled minibatches of `buffer`. On a non-finite loss the inputs
/// are left untouched and an error is returned.
pub fn ppo_update<R: Rng + ?Sized>(
    actor: &mut DenoiserParams,
    critic: &mut Critic,
    buffer: &ReplayBuffer,
    objective: usize,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoReport> {
    if buffer.is_empty() {
        return Err(Error::InvalidConfig("ppo_update needs a non-empty buffer".into()));
    }
    let mut a = actor.clone();
    let mut c = critic.clone();
    let mut a_opt = Adam::new(cfg.policy_adam(), a.len());
    let mut c_opt = Adam::new(cfg.critic_adam(), c.data.len());
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut report = PpoReport::default();
    for _ in 0..cfg.ppo_epochs.max(1) {
        order.shuffle(rng);
        let mut sums = [0.0; 4];
        for chunk in order.chunks(cfg.minibatch) {
            let parts: Vec<Result<SampleGrad>> = chunk
                .par_iter()
                .map(|&i| sample_grad(&a, &c, &buffer.transitions[i], objective, cfg))
                .collect();
            let scale = 1.0 / chunk.len() as f64;
            let mut ga = vec![0.0; a.len()];
            let mut gc = vec![0.0; c.data.len()];
            let mut loss = 0.0;
            for part in parts {
                let s = part?;
                loss += scale
                    * (-s.surrogate - cfg.entropy_weight * s.entropy
                        + cfg.value_weight * s.value_err * s.value_err);
                sums[0] -= s.surrogate;
                sums[1] += s.value_err * s.value_err;
                sums[2] += s.entropy;
                sums[3] += s.ratio;
                ga.iter_mut().zip(&s.actor).for_each(|(g, x)| *g += scale * x);
                gc.iter_mut().zip(&s.critic).for_each(|(g, x)| *g += scale * x);
            }
            if !loss.is_finite() || ga.iter().chain(&gc).any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(format!("ppo loss {loss} on objective {objective}")));
            }
            a_opt.update(&mut a.data, &ga);
            c_opt.update(&mut c.data, &gc);
        }
        let n = buffer.len() as f64;
        report = PpoReport {
            policy_loss: sums[0] / n,
            value_loss: sums[1] / n,
            entropy: sums[2] / n,
            mean_ratio: sums[3] / n,
        };
    }
    *actor = a;
    *critic = c;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::neural::diffusion::{cosine_steps, NoiseSchedule};
    use crate::neural::net::NetConfig;
    use crate::rl::buffer::fill_buffer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (DenoiserParams, Critic, ReplayBuffer) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let insts: Vec<_> = (0..2)
            .map(|i| generate_instance(&GeneratorConfig::desk(), &format!("p{i}"), &mut rng).unwrap())
            .collect();
        let cfg = NetConfig {
            layers: 1,
            hidden: 8,
            time_dim: 4,
        };
        let p = DenoiserParams::init(cfg, &mut rng);
        let refs = vec![[20.0, 20.0]; 2];
        let buf = fill_buffer(
            &p,
            &insts,
            &refs,
            12,
            &cosine_steps(3, 1000),
            &NoiseSchedule::default_schedule(),
            &mut rng,
        )
        .unwrap();
        let critic = Critic::new(2 * 8 + 2, 4, &mut rng);
        (p, critic, buf)
    }

    #[test]
    fn paper_echo_validates() {
        let cfg = PpoConfig::paper();
        cfg.validate().unwrap();
        assert_eq!((cfg.inference_steps, cfg.buffer_size, cfg.iterations), (3, 50_000, 50));
        assert_eq!((cfg.gamma, cfg.clip, cfg.entropy_weight, cfg.value_weight), (0.99, 0.2, 0.01, 0.5));
        let bad = PpoConfig {
            clip: 1.0,
            ..PpoConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identity_policy_has_unit_ratios() {
        let (p, mut critic, buf) = setup();
        let cfg = PpoConfig {
            policy_lr: 0.0,
            critic_lr: 0.0,
            ppo_epochs: 1,
            ..PpoConfig::default()
        };
        let mut a = p.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let before = critic.clone();
        let rep = ppo_update(&mut a, &mut critic, &buf, 0, &cfg, &mut rng).unwrap();
        assert!((rep.mean_ratio - 1.0).abs() < 1e-12);
        assert_eq!(a, p);
        assert_eq!(critic, before);
        let mean_adv: f64 = buf
            .transitions
            .iter()
            .map(|tr| advantage(tr.terminal_reward[0], before.value(&tr.critic_input), tr.k, tr.horizon, cfg.gamma))
            .sum::<f64>()
            / buf.len() as f64;
        assert!((rep.policy_loss + mean_adv).abs() < 1e-9);
    }

    #[test]
    fn empty_buffer_is_rejected() {
        let (mut p, mut critic, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = ppo_update(&mut p, &mut critic, &ReplayBuffer::default(), 0, &PpoConfig::default(), &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn non_finite_reward_leaves_parameters() {
        let (p, critic, mut buf) = setup();
        buf.transitions[0].terminal_reward[1] = f64::NAN;
        let (mut a, mut c) = (p.clone(), critic.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = ppo_update(&mut a, &mut c, &buf, 1, &PpoConfig::default(), &mut rng);
        assert!(matches!(r, Err(Error::NonFiniteLoss(_))));
        assert_eq!(a, p);
        assert_eq!(c, critic);
    }

    #[test]
    fn update_raises_surrogate() {
        let (p, critic, buf) = setup();
        let cfg = PpoConfig {
            policy_lr: 1e-3,
            critic_lr: 0.0,
            ppo_epochs: 4,
            minibatch: 4,
            ..PpoConfig::default()
        };
        let (mut a, mut c) = (p.clone(), critic.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let first = ppo_update(&mut a, &mut c, &buf, 0, &PpoConfig { ppo_epochs: 1, policy_lr: 0.0, critic_lr: 0.0, ..cfg.clone() }, &mut rng).unwrap();
        let (mut a, mut c) = (p.clone(), critic.clone());
        let rep = ppo_update(&mut a, &mut c, &buf, 0, &cfg, &mut rng).unwrap();
        assert!(rep.policy_loss < first.policy_loss, "{rep:?} vs {first:?}");
        assert_ne!(a, p);
    }

    #[test]
    fn value_head_fits_constant_rewards() {
        let (mut p, critic, mut buf) = setup();
        for tr in &mut buf.transitions {
            tr.terminal_reward = [-0.6, -0.3];
        }
        let cfg = PpoConfig {
            policy_lr: 0.0,
            critic_lr: 1e-2,
            ppo_epochs: 200,
            minibatch: buf.len(),
            ..PpoConfig::default()
        };
        let mut c = critic.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rep = ppo_update(&mut p, &mut c, &buf, 0, &cfg, &mut rng).unwrap();
        assert!(rep.value_loss < 1e-3, "{rep:?}");
    }
}
