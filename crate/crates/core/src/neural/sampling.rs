//! Few-step consistency sampling and the model-based solver built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costmodel::Assignment;
use crate::error::Result;
use crate::heuristics::{repair, Marginals};
use crate::instance::Instance;
use crate::neural::diffusion::{cosine_steps, linear_steps, NoiseSchedule};
use crate::neural::graph::{build_graph, HeteroGraph};
use crate::neural::net::{forward, DenoiserParams};
use crate::preference::PreferenceWeight;

/// How the re-noising steps are spaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Cosine,
    Linear,
}

/// `t_1 > … > t_{K-1}` for `K` inference steps.
pub fn sample_steps(rule: StepRule, k: usize, steps: usize) -> Vec<usize> {
    match rule {
        StepRule::Cosine => cosine_steps(k, steps),
        StepRule::Linear => linear_steps(k, steps),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutput {
    pub probs: Vec<f64>,
    pub bits: Vec<u8>,
    pub passes: usize,
}

pub fn threshold(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| (p > 0.5) as u8).collect()
}

/// Uniform start, one denoising pass at `T`, then for every `t_k`: re-noise
/// the current point estimate to `t_k` and denoise again.
pub fn consistency_sample<R: Rng + ?Sized>(
    params: &DenoiserParams,
    g: &HeteroGraph,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<SampleOutput> {
    let n = g.num_vars();
    let x_t: Vec<u8> = (0..n).map(|_| rng.gen::<bool>() as u8).collect();
    let mut probs = forward(params, g, &x_t, schedule.steps())?.probs();
    for &t in steps {
        let x0 = threshold(&probs);
        let x_t = schedule.noise_sample(&x0, t, rng);
        probs = forward(params, g, &x_t, t)?.probs();
    }
    Ok(SampleOutput {
        bits: threshold(&probs),
        probs,
        passes: 1 + steps.len(),
    })
}

/// Samples under preference `w` and repairs the marginals.
pub fn solve_with_model<R: Rng + ?Sized>(
    params: &DenoiserParams,
    inst: &Instance,
    w: PreferenceWeight,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Assignment> {
    let g = build_graph(inst, w);
    let out = consistency_sample(params, &g, steps, schedule, rng)?;
    repair(inst, &Marginals::new(inst.num_pairs(), inst.num_mecs(), out.probs)?)
}
