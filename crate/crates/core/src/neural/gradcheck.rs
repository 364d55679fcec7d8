//! Finite-difference verification of the consistency-loss gradient.

use crate::error::Result;
use crate::neural::net::DenoiserParams;
use crate::neural::train::{cm_loss, TrainExample};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_err: f64,
}

/// Relative error with a small absolute floor so exact zeros compare as 0.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-10)
}

/// Compares the analytic gradient of the loss at fixed noisy states against
/// central differences of step `h` on the given parameter indices.
pub fn grad_check(
    params: &DenoiserParams,
    ex: &TrainExample,
    noisy: (&[u8], usize),
    anchor: (&[u8], usize),
    indices: &[usize],
    h: f64,
) -> Result<GradCheck> {
    let mut grad = vec![0.0; params.len()];
    cm_loss(params, ex, noisy, anchor, Some(&mut grad))?;
    let mut probe = params.clone();
    let mut analytic = Vec::with_capacity(indices.len());
    let mut numeric = Vec::with_capacity(indices.len());
    let mut max_rel_err: f64 = 0.0;
    for &i in indices {
        let orig = probe.data[i];
        probe.data[i] = orig + h;
        let up = cm_loss(&probe, ex, noisy, anchor, None)?;
        probe.data[i] = orig - h;
        let down = cm_loss(&probe, ex, noisy, anchor, None)?;
        probe.data[i] = orig;
        let fd = (up - down) / (2.0 * h);
        max_rel_err = max_rel_err.max(relative_error(grad[i], fd));
        analytic.push(grad[i]);
        numeric.push(fd);
    }
    Ok(GradCheck {
        analytic,
        numeric,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::neural::graph::build_graph;
    use crate::neural::net::NetConfig;
    use crate::preference::PreferenceWeight;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn case(cfg: NetConfig, seed: u64) -> (DenoiserParams, TrainExample, Vec<u8>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = GeneratorConfig {
            num_users: 2,
            num_spaces: 2,
            num_mecs: 3,
            p_offline: 0.0,
            ..GeneratorConfig::desk()
        };
        let inst = generate_instance(&gen, "g", &mut rng).unwrap();
        let g = build_graph(&inst, PreferenceWeight::new(0.4));
        let n = g.num_vars();
        let target: Vec<u8> = (0..n).map(|j| (j % inst.num_mecs() == 0) as u8).collect();
        let xt: Vec<u8> = (0..n).map(|_| rng.gen::<bool>() as u8).collect();
        let xtp: Vec<u8> = (0..n).map(|_| rng.gen::<bool>() as u8).collect();
        let p = DenoiserParams::init(cfg, &mut rng);
        (p, TrainExample { graph: g, target }, xt, xtp)
    }

    #[test]
    fn head_only_network() {
        let cfg = NetConfig {
            layers: 0,
            hidden: 6,
            time_dim: 4,
        };
        let (p, ex, xt, xtp) = case(cfg, 1);
        let idx: Vec<usize> = p.head_indices().collect();
        let r = grad_check(&p, &ex, (&xt, 700), (&xtp, 200), &idx, 1e-5).unwrap();
        assert!(r.max_rel_err < 1e-8, "{r:?}");
    }

    #[test]
    fn two_layer_network() {
        let cfg = NetConfig {
            layers: 2,
            hidden: 8,
            time_dim: 4,
        };
        let (p, ex, xt, xtp) = case(cfg, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let idx: Vec<usize> = sample(&mut rng, p.len(), 20).into_vec();
        let r = grad_check(&p, &ex, (&xt, 650), (&xtp, 200), &idx, 1e-5).unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
    }

    #[test]
    fn stationary_at_zero_loss() {
        let cfg = NetConfig {
            layers: 0,
            hidden: 1,
            time_dim: 2,
        };
        let (mut p, ex, _, _) = case(cfg, 3);
        // logit = 80·bit - 40 reproduces the current bit
        let bit_col = crate::neural::graph::VAR_FEATURES;
        p.data[bit_col] = 80.0;
        let head = p.head_indices();
        p.data[head.start] = 1.0;
        p.data[head.end - 1] = -40.0;
        let x = ex.target.clone();
        let mut grad = vec![0.0; p.len()];
        let loss = cm_loss(&p, &ex, (&x, 1), (&x, 1), Some(&mut grad)).unwrap();
        assert!(loss < 1e-15);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "{norm}");
    }
}
