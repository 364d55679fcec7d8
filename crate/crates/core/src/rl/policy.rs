//! Factorized Bernoulli policy over the variable bits: log-likelihoods,
//! entropies and divergences computed from logits.

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    crate::neural::net::sigmoid_prob(z)
}

/// `ln π(a | z)` for one bit.
pub fn bit_logprob(z: f64, a: u8) -> f64 {
    if a == 1 {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// Sum of per-bit log-likelihoods.
pub fn policy_logprob(logits: &[f64], action: &[u8]) -> f64 {
    assert_eq!(logits.len(), action.len());
    logits.iter().zip(action).map(|(&z, &a)| bit_logprob(z, a)).sum()
}

/// `∂ ln π(a | z) / ∂z = a - σ(z)`.
pub fn logprob_grad(z: f64, a: u8) -> f64 {
    a as f64 - sigmoid(z)
}

/// Bernoulli entropy of `σ(z)`.
pub fn bit_entropy(z: f64) -> f64 {
    softplus(z) - z * sigmoid(z)
}

/// `∂H/∂z = -z·σ(z)·(1 - σ(z))`.
pub fn entropy_grad(z: f64) -> f64 {
    let s = sigmoid(z);
    -z * s * (1.0 - s)
}

pub const KL_CLAMP: f64 = 1e-6;

/// `KL(Bern(p) ‖ Bern(q))` with both probabilities clamped away from 0 and 1.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = p.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    let q = q.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// PPO clipped surrogate `min(r·A, clip(r, 1-ε, 1+ε)·A)`.
pub fn clipped_surrogate(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Whether the surrogate's gradient flows through the unclipped term.
pub fn surrogate_active(ratio: f64, adv: f64, eps: f64) -> bool {
    !((adv > 0.0 && ratio > 1.0 + eps) || (adv < 0.0 && ratio < 1.0 - eps))
}

/// `γ^(K-1-k)·r - V`.
pub fn advantage(reward: f64, value: f64, k: usize, horizon: usize, gamma: f64) -> f64 {
    gamma.powi((horizon - 1 - k) as i32) * reward - value
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logprob_cases() {
        let n = 5;
        let lp = policy_logprob(&vec![0.0; n], &[1, 0, 1, 1, 0]);
        assert!((lp + n as f64 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(policy_logprob(&[800.0, -800.0], &[1, 0]).abs() < 1e-300);
        // three variables, by enumeration
        let z = [0.3, -1.2, 2.0];
        let a = [1u8, 1, 0];
        let p: Vec<f64> = z.iter().map(|&v| 1.0 / (1.0 + (-v as f64).exp())).collect();
        let hand = (p[0] * p[1] * (1.0 - p[2])).ln();
        assert!((policy_logprob(&z, &a) - hand).abs() < 1e-12);
    }

    #[test]
    fn entropy_and_kl() {
        assert!(bit_entropy(800.0).abs() < 1e-12);
        assert!((bit_entropy(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((bernoulli_kl(1.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-4);
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert!(bernoulli_kl(1.0, 0.0).is_finite());
    }

    #[test]
    fn surrogate_and_advantage() {
        assert_eq!(clipped_surrogate(2.0, 1.0, 0.2), 1.2);
        assert_eq!(clipped_surrogate(1.0, -3.0, 0.2), -3.0);
        assert!((advantage(1.0, 0.0, 0, 3, 0.99) - 0.9801).abs() < 1e-15);
        assert_eq!(advantage(2.5, 2.5, 2, 3, 0.99), 0.0);
        assert_eq!(advantage(4.0, 1.0, 2, 3, 0.5), 3.0);
    }

    proptest! {
        #[test]
        fn identities(z in prop::collection::vec(-8.0f64..8.0, 1..6), bits in prop::collection::vec(0u8..2, 6), r in 0.0f64..5.0, a in -10.0f64..10.0) {
            let a_bits = &bits[..z.len()];
            let lp = policy_logprob(&z, a_bits);
            let prod: f64 = z.iter().zip(a_bits).map(|(&v, &b)| {
                let p = 1.0 / (1.0 + (-v).exp());
                if b == 1 { p } else { 1.0 - p }
            }).product();
            prop_assert!((lp.exp() - prod).abs() <= 1e-10 * prod.max(1e-300));
            let s = clipped_surrogate(r, a, 0.2);
            prop_assert!(s <= 1.2 * a.abs() + 1e-12);
            if a >= 0.0 || r <= 1.2 {
                prop_assert!(s.abs() <= 1.2 * a.abs() + 1e-12);
            }
        }
    }
}
