//! Forward-KL distillation of the objective policies into the global one.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neural::graph::HeteroGraph;
use crate::neural::net::{backward, forward, DenoiserParams};
use crate::neural::optim::{Adam, AdamConfig};
use crate::rl::policy::{bernoulli_kl, sigmoid, KL_CLAMP};

/// A state with the fixed teacher distributions over its variables.
#[derive(Clone, Debug)]
pub struct DistillTarget {
    pub graph: Arc<HeteroGraph>,
    pub t: usize,
    pub state: Vec<u8>,
    /// One probability vector per objective policy.
    pub teachers: Vec<Vec<f64>>,
    /// Previous global policy.
    pub anchor: Vec<f64>,
}

/// Evaluates every teacher and the anchor on each state once.
pub fn distill_targets(
    states: &[(Arc<HeteroGraph>, usize, Vec<u8>)],
    teachers: &[&DenoiserParams],
    anchor: &DenoiserParams,
) -> Result<Vec<DistillTarget>> {
    states
        .par_iter()
        .map(|(g, t, x)| {
            let teachers = teachers
                .iter()
                .map(|p| Ok(forward(p, g, x, *t)?.probs()))
                .collect::<Result<Vec<_>>>()?;
            Ok(DistillTarget {
                graph: g.clone(),
                t: *t,
                state: x.clone(),
                teachers,
                anchor: forward(anchor, g, x, *t)?.probs(),
            })
        })
        .collect()
}

fn clamp(p: f64) -> f64 {
    p.clamp(KL_CLAMP, 1.0 - KL_CLAMP)
}

/// `Σ_i KL(p_i ‖ q) + η₃·KL(p_a ‖ q)` averaged over variables, and its
/// gradient with respect to the student logits.
pub fn distill_loss(target: &DistillTarget, logits: &[f64], anchor_weight: f64) -> (f64, Vec<f64>) {
    let n = logits.len();
    let inv_n = 1.0 / n.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(n);
    for (j, &z) in logits.iter().enumerate() {
        let q = sigmoid(z);
        let mut pull = 0.0;
        for p in &target.teachers {
            loss += bernoulli_kl(p[j], q) * inv_n;
            pull += clamp(p[j]);
        }
        loss += anchor_weight * bernoulli_kl(target.anchor[j], q) * inv_n;
        pull += anchor_weight * clamp(target.anchor[j]);
        let mass = target.teachers.len() as f64 + anchor_weight;
        grad.push((mass * q - pull) * inv_n);
    }
    (loss, grad)
}

/// Minibatch Adam on the distillation loss, starting from `student`.
/// Returns the mean loss of the last epoch.
pub fn kl_distill<R: Rng + ?Sized>(
    student: &mut DenoiserParams,
    targets: &[DistillTarget],
    anchor_weight: f64,
    adam: AdamConfig,
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Result<f64> {
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut s = student.clone();
    let mut opt = Adam::new(adam, s.len());
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let mut last = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(minibatch.max(1)) {
            let parts: Vec<Result<(f64, Vec<f64>)>> = chunk
                .par_iter()
                .map(|&i| {
                    let tg = &targets[i];
                    let tr = forward(&s, &tg.graph, &tg.state, tg.t)?;
                    let (l, dz) = distill_loss(tg, &tr.logits, anchor_weight);
                    let mut g = vec![0.0; s.len()];
                    backward(&s, &tg.graph, &tr, &dz, &mut g);
                    Ok((l, g))
                })
                .collect();
            let scale = 1.0 / chunk.len() as f64;
            let mut grad = vec![0.0; s.len()];
            let mut loss = 0.0;
            for part in parts {
                let (l, g) = part?;
                loss += l * scale;
                total += l;
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += scale * b);
            }
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(format!("distillation loss {loss}")));
            }
            opt.update(&mut s.data, &grad);
        }
        last = total / targets.len() as f64;
    }
    *student = s;
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::neural::graph::build_graph;
    use crate::neural::net::NetConfig;
    use crate::preference::PreferenceWeight;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn target(teachers: Vec<Vec<f64>>, anchor: Vec<f64>) -> DistillTarget {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inst = generate_instance(&GeneratorConfig::desk(), "d", &mut rng).unwrap();
        DistillTarget {
            graph: Arc::new(build_graph(&inst, PreferenceWeight::new(0.5))),
            t: 1,
            state: Vec::new(),
            teachers,
            anchor,
        }
    }

    #[test]
    fn identical_teachers_give_zero_loss_and_gradient() {
        let p = vec![0.3, 0.9, 0.5];
        let tg = target(vec![p.clone(), p.clone()], p.clone());
        let logits: Vec<f64> = p.iter().map(|&q: &f64| (q / (1.0 - q)).ln()).collect();
        let (l, g) = distill_loss(&tg, &logits, 0.7);
        assert!(l.abs() < 1e-12);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn barycenter_of_opposed_teachers() {
        let tg = target(vec![vec![0.2], vec![0.8]], vec![0.5]);
        let mut z = 1.7;
        for _ in 0..2000 {
            let (_, g) = distill_loss(&tg, &[z], 0.0);
            z -= 0.5 * g[0];
        }
        assert!((sigmoid(z) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_differences() {
        let tg = target(vec![vec![0.1, 1.0], vec![0.6, 0.0]], vec![0.4, 0.5]);
        let z = [0.4, -1.1];
        let (_, g) = distill_loss(&tg, &z, 0.3);
        for j in 0..2 {
            let mut up = z;
            up[j] += 1e-6;
            let mut dn = z;
            dn[j] -= 1e-6;
            let fd = (distill_loss(&tg, &up, 0.3).0 - distill_loss(&tg, &dn, 0.3).0) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6, "{fd} {}", g[j]);
        }
    }

    #[test]
    fn student_equal_to_teachers_stays_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = generate_instance(&GeneratorConfig::desk(), "d", &mut rng).unwrap();
        let cfg = NetConfig {
            layers: 1,
            hidden: 8,
            time_dim: 4,
        };
        let p = DenoiserParams::init(cfg, &mut rng);
        let g = Arc::new(build_graph(&inst, PreferenceWeight::new(0.2)));
        let x: Vec<u8> = (0..g.num_vars()).map(|j| (j % 3 == 0) as u8).collect();
        let targets = distill_targets(&[(g, 300, x)], &[&p, &p], &p).unwrap();
        let mut s = p.clone();
        let loss = kl_distill(&mut s, &targets, 1.0, AdamConfig { weight_decay: 0.0, ..AdamConfig::default() }, 1, 8, &mut rng).unwrap();
        assert!(loss.abs() < 1e-12, "{loss}");
        let drift = s.data.iter().zip(&p.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "{drift}");
    }
}
