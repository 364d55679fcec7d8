//! Preference weights on the latency/energy simplex and their sampling.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

/// `[w_latency, w_energy]` with `w_latency + w_energy = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceWeight([f64; 2]);

impl PreferenceWeight {
    pub const LATENCY: PreferenceWeight = PreferenceWeight([1.0, 0.0]);
    pub const ENERGY: PreferenceWeight = PreferenceWeight([0.0, 1.0]);

    /// `[w, 1 - w]`; `w` is clamped into `[0, 1]`.
    pub fn new(w_latency: f64) -> Self {
        let w = w_latency.clamp(0.0, 1.0);
        PreferenceWeight([w, 1.0 - w])
    }

    pub fn latency(&self) -> f64 {
        self.0[0]
    }

    pub fn energy(&self) -> f64 {
        self.0[1]
    }

    pub fn as_array(&self) -> [f64; 2] {
        self.0
    }
}

/// Dirichlet draw over the `(I-1)`-simplex with concentration `chi`.
/// The last coordinate is set to `1 - sum(rest)` so the vector sums to one.
pub fn sample_dirichlet<R: Rng + ?Sized>(chi: &[f64], rng: &mut R) -> Vec<f64> {
    assert!(!chi.is_empty() && chi.iter().all(|&c| c > 0.0));
    let draws: Vec<f64> = chi
        .iter()
        .map(|&c| Gamma::new(c, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    let mut w: Vec<f64> = draws.iter().map(|g| g / total).collect();
    let last = w.len() - 1;
    let head: f64 = w[..last].iter().sum();
    w[last] = (1.0 - head).max(0.0);
    w
}

/// Uniform preference on the bi-objective simplex (Dirichlet with unit
/// concentration, i.e. `w ~ Uniform(0, 1)`).
pub fn sample_preference<R: Rng + ?Sized>(rng: &mut R) -> PreferenceWeight {
    let w = sample_dirichlet(&[1.0, 1.0], rng);
    PreferenceWeight::new(w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let w = sample_preference(&mut rng);
            assert_eq!(w.latency() + w.energy(), 1.0);
            assert!(w.latency() >= 0.0 && w.energy() >= 0.0);
        }
        assert_eq!(PreferenceWeight::LATENCY.as_array(), [1.0, 0.0]);
    }

    #[test]
    fn dirichlet_three_way() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = sample_dirichlet(&[1.0, 1.0, 1.0], &mut rng);
        assert_eq!(w.len(), 3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
