//! Graph-level value head: pooled embeddings and the preference through a
//! one-hidden-layer tanh network.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::neural::checkpoint::CriticSnapshot;

#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub input: usize,
    pub hidden: usize,
    /// `W1 (input x hidden)`, `b1`, `w2`, `b2`.
    pub data: Vec<f64>,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut data = vec![0.0; input * hidden + 2 * hidden + 1];
        let normal = Normal::new(0.0, 1.0 / (input.max(1) as f64).sqrt()).expect("finite");
        for x in &mut data[..input * hidden] {
            *x = normal.sample(rng);
        }
        let out = Normal::new(0.0, 1.0 / (hidden.max(1) as f64).sqrt()).expect("finite");
        for x in &mut data[input * hidden + hidden..input * hidden + 2 * hidden] {
            *x = 0.1 * out.sample(rng);
        }
        Critic { input, hidden, data }
    }

    pub fn snapshot(&self) -> CriticSnapshot {
        CriticSnapshot {
            input: self.input,
            hidden: self.hidden,
            data: self.data.clone(),
        }
    }

    pub fn from_snapshot(s: &CriticSnapshot) -> Result<Self> {
        if s.data.len() != s.input * s.hidden + 2 * s.hidden + 1 {
            return Err(Error::Dimension("critic snapshot size".into()));
        }
        Ok(Critic {
            input: s.input,
            hidden: s.hidden,
            data: s.data.clone(),
        })
    }

    fn hidden_act(&self, x: &[f64]) -> Vec<f64> {
        let (n, h) = (self.input, self.hidden);
        (0..h)
            .map(|j| {
                let mut a = self.data[n * h + j];
                for (i, xi) in x.iter().enumerate() {
                    a += xi * self.data[i * h + j];
                }
                a.tanh()
            })
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input);
        let (n, h) = (self.input, self.hidden);
        let hid = self.hidden_act(x);
        let w2 = &self.data[n * h + h..n * h + 2 * h];
        hid.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() + self.data[n * h + 2 * h]
    }

    /// Adds `scale · ∂V/∂ω` into `grad` and returns `V`.
    pub fn backward(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let (n, h) = (self.input, self.hidden);
        let hid = self.hidden_act(x);
        let w2_off = n * h + h;
        let v = hid
            .iter()
            .zip(&self.data[w2_off..w2_off + h])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.data[n * h + 2 * h];
        grad[n * h + 2 * h] += scale;
        for j in 0..h {
            grad[w2_off + j] += scale * hid[j];
            let dpre = scale * self.data[w2_off + j] * (1.0 - hid[j] * hid[j]);
            grad[n * h + j] += dpre;
            for (i, xi) in x.iter().enumerate() {
                grad[i * h + j] += dpre * xi;
            }
        }
        v
    }
}
