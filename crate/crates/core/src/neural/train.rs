//! Consistency training on oracle labels.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::Assignment;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::neural::diffusion::NoiseSchedule;
use crate::neural::graph::{build_graph, HeteroGraph};
use crate::neural::net::{backward, forward, DenoiserParams};
use crate::neural::optim::{Adam, AdamConfig};
use crate::oracle::LabeledExample;
use crate::preference::PreferenceWeight;

/// A graph under its label's preference, with the label as variable bits.
#[derive(Clone, Debug)]
pub struct TrainExample {
    pub graph: HeteroGraph,
    pub target: Vec<u8>,
}

/// Variable-node bits of a placement.
pub fn assignment_bits(x: &Assignment, num_mecs: usize) -> Vec<u8> {
    let mut bits = vec![0u8; x.len() * num_mecs];
    for (i, s) in x.slots().iter().enumerate() {
        if let Some(m) = s {
            bits[i * num_mecs + m] = 1;
        }
    }
    bits
}

/// Objective 1 labels train under `w = [1, 0]`, objective 2 under `[0, 1]`.
pub fn examples_from_labels(instances: &[Instance], labels: &[LabeledExample]) -> Result<Vec<TrainExample>> {
    let by_id: HashMap<&str, &Instance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    labels
        .iter()
        .map(|l| {
            let inst = by_id.get(l.instance_id.as_str()).ok_or_else(|| {
                Error::Dimension(format!("label for unknown instance {}", l.instance_id))
            })?;
            let w = match l.objective {
                1 => PreferenceWeight::LATENCY,
                2 => PreferenceWeight::ENERGY,
                o => return Err(Error::InvalidConfig(format!("objective tag {o} is not 1 or 2"))),
            };
            let x = Assignment::from_triples(inst, &l.triples)?;
            Ok(TrainExample {
                graph: build_graph(inst, w),
                target: assignment_bits(&x, inst.num_mecs()),
            })
        })
        .collect()
}

/// `softplus(z) - y·z`, the binary cross-entropy of `sigmoid(z)`.
pub fn bce_logit(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

fn mean_bce(
    params: &DenoiserParams,
    ex: &TrainExample,
    x: &[u8],
    t: usize,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let n = ex.target.len();
    if n == 0 {
        return Ok(0.0);
    }
    let tr = forward(params, &ex.graph, x, t)?;
    let loss = tr
        .logits
        .iter()
        .zip(&ex.target)
        .map(|(&z, &y)| bce_logit(z, y as f64))
        .sum::<f64>()
        / n as f64;
    if let Some(g) = grad {
        let dz: Vec<f64> = tr
            .probs()
            .iter()
            .zip(&ex.target)
            .map(|(&p, &y)| (p - y as f64) / n as f64)
            .collect();
        backward(params, &ex.graph, &tr, &dz, g);
    }
    Ok(loss)
}

/// Consistency loss of one example at fixed noisy states:
/// `BCE(f(x_t, t), x0) + BCE(f(x_t', t'), x0)`, each averaged per variable.
pub fn cm_loss(
    params: &DenoiserParams,
    ex: &TrainExample,
    noisy: (&[u8], usize),
    anchor: (&[u8], usize),
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    let a = mean_bce(params, ex, noisy.0, noisy.1, grad.as_deref_mut())?;
    let b = mean_bce(params, ex, anchor.0, anchor.1, grad)?;
    Ok(a + b)
}

/// Draws `t ~ U{1..T}`, noises the label to `t` and to the anchor step, and
/// returns the batch-mean loss with its gradient.
pub fn cm_loss_and_grad<R: Rng + ?Sized>(
    params: &DenoiserParams,
    batch: &[&TrainExample],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let tp = schedule.anchor_step();
    let draws: Vec<(Vec<u8>, usize, Vec<u8>)> = batch
        .iter()
        .map(|ex| {
            let t = rng.gen_range(1..=schedule.steps());
            let xt = schedule.noise_sample(&ex.target, t, rng);
            let xtp = schedule.noise_sample(&ex.target, tp, rng);
            (xt, t, xtp)
        })
        .collect();
    let parts: Vec<Result<(f64, Vec<f64>)>> = batch
        .par_iter()
        .zip(draws.par_iter())
        .map(|(ex, (xt, t, xtp))| {
            let mut g = vec![0.0; params.len()];
            let l = cm_loss(params, ex, (xt, *t), (xtp, tp), Some(&mut g))?;
            Ok((l, g))
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for part in parts {
        let (l, g) = part?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = 1.0 / batch.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, grad))
}

/// One optimizer step on a batch. Non-finite losses leave `params` untouched.
pub fn cm_train_step<R: Rng + ?Sized>(
    params: &mut DenoiserParams,
    opt: &mut Adam,
    batch: &[&TrainExample],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<f64> {
    let (loss, grad) = cm_loss_and_grad(params, batch, schedule, rng)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss(format!(
            "consistency loss {loss} at optimizer step {}",
            opt.step
        )));
    }
    opt.update(&mut params.data, &grad);
    Ok(loss)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 16,
            adam: AdamConfig::default(),
        }
    }
}

/// Mini-batch epochs over shuffled examples; returns the mean loss per
/// epoch. `on_epoch` sees `(epoch, mean_loss)`.
pub fn train_consistency<R: Rng + ?Sized>(
    params: &mut DenoiserParams,
    examples: &[TrainExample],
    schedule: &NoiseSchedule,
    cfg: &TrainConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    if examples.is_empty() {
        return Err(Error::InvalidConfig("no training examples".into()));
    }
    let per_epoch = examples.len().div_ceil(cfg.batch_size);
    let mut adam_cfg = cfg.adam;
    if adam_cfg.decay_steps == 0 {
        adam_cfg.decay_steps = per_epoch * cfg.epochs;
    }
    let mut opt = Adam::new(adam_cfg, params.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &examples[i]).collect();
            total += cm_train_step(params, &mut opt, &batch, schedule, rng)?;
        }
        let mean = total / per_epoch as f64;
        on_epoch(epoch, mean);
        curve.push(mean);
    }
    Ok(curve)
}
