//! Binary discrete-diffusion noise: per-step symmetric transition matrices,
//! their closed-form products and the sampling time-step rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    /// Flip probability rising linearly from `1e-4` to `0.02`.
    LinearFlip,
    /// Stay probability falling linearly from `1 - 1e-4` to `0.5`.
    LinearStay,
    /// Stay probability fixed at the given value (tests and ablations).
    Constant,
}

#[derive(Deserialize)]
struct ScheduleFile {
    kind: BetaKind,
    betas: Vec<f64>,
    alpha: f64,
}

impl TryFrom<ScheduleFile> for NoiseSchedule {
    type Error = Error;
    fn try_from(f: ScheduleFile) -> Result<Self> {
        NoiseSchedule::from_betas(f.kind, f.betas, f.alpha)
    }
}

/// `betas[t-1]` is the stay probability of step `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleFile")]
pub struct NoiseSchedule {
    pub kind: BetaKind,
    pub betas: Vec<f64>,
    /// Boundary fraction: the training anchor step is `alpha * T`.
    pub alpha: f64,
    /// `prod_{s<=t}(2β_s - 1)`, index `t`, with `prod[0] = 1`.
    #[serde(skip)]
    prod: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: BetaKind, steps: usize, alpha: f64) -> Result<Self> {
        let betas = match kind {
            BetaKind::LinearFlip => linspace(1e-4, 0.02, steps).map(|f| 1.0 - f).collect(),
            BetaKind::LinearStay => linspace(1.0 - 1e-4, 0.5, steps).collect(),
            BetaKind::Constant => {
                return Err(Error::InvalidConfig("use NoiseSchedule::constant".into()))
            }
        };
        Self::from_betas(kind, betas, alpha)
    }

    pub fn constant(stay: f64, steps: usize, alpha: f64) -> Result<Self> {
        Self::from_betas(BetaKind::Constant, vec![stay; steps], alpha)
    }

    pub fn from_betas(kind: BetaKind, betas: Vec<f64>, alpha: f64) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidConfig("schedule needs at least one step".into()));
        }
        if betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::InvalidConfig("stay probabilities must lie in [0, 1]".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) || alpha * (betas.len() as f64) < 1.0 {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1) with alpha*T >= 1".into()));
        }
        let mut s = NoiseSchedule {
            kind,
            betas,
            alpha,
            prod: Vec::new(),
        };
        s.rebuild();
        Ok(s)
    }

    fn rebuild(&mut self) {
        let mut prod = Vec::with_capacity(self.betas.len() + 1);
        prod.push(1.0);
        for b in &self.betas {
            let last = *prod.last().expect("seeded");
            prod.push(last * (2.0 * b - 1.0));
        }
        self.prod = prod;
    }

    /// 1000 steps, anchor at 0.2.
    pub fn default_schedule() -> Self {
        Self::new(BetaKind::LinearFlip, 1000, 0.2).expect("valid constants")
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    /// Training anchor step `t' = αT`.
    pub fn anchor_step(&self) -> usize {
        ((self.alpha * self.steps() as f64).floor() as usize).max(1)
    }

    /// `Q_t = [[β, 1-β], [1-β, β]]`.
    pub fn q_step(&self, t: usize) -> [[f64; 2]; 2] {
        let b = self.betas[t - 1];
        [[b, 1.0 - b], [1.0 - b, b]]
    }

    /// Probability that a bit survives the first `t` steps unchanged.
    pub fn stay_prob(&self, t: usize) -> f64 {
        0.5 * (1.0 + self.prod[t])
    }

    /// Closed-form `Q̄_t = Q_1 ⋯ Q_t`.
    pub fn qbar(&self, t: usize) -> [[f64; 2]; 2] {
        assert!(t >= 1 && t <= self.steps(), "step {t} outside 1..={}", self.steps());
        let s = self.stay_prob(t);
        [[s, 1.0 - s], [1.0 - s, s]]
    }

    /// `Q̄_t` by explicit matrix products.
    pub fn qbar_iterated(&self, t: usize) -> [[f64; 2]; 2] {
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        for s in 1..=t {
            let q = self.q_step(s);
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = acc[i][0] * q[0][j] + acc[i][1] * q[1][j];
                }
            }
            acc = next;
        }
        acc
    }

    /// Draws `x_t` from the `x0` row of `Q̄_t`, independently per bit.
    pub fn noise_sample<R: Rng + ?Sized>(&self, x0: &[u8], t: usize, rng: &mut R) -> Vec<u8> {
        let stay = self.stay_prob(t);
        x0.iter()
            .map(|&b| if rng.gen::<f64>() < stay { b } else { 1 - b })
            .collect()
    }

    /// One transition through `Q_t`.
    pub fn noise_step<R: Rng + ?Sized>(&self, x: &[u8], t: usize, rng: &mut R) -> Vec<u8> {
        let stay = self.betas[t - 1];
        x.iter()
            .map(|&b| if rng.gen::<f64>() < stay { b } else { 1 - b })
            .collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            a
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    })
}

/// Re-noising steps `t_1 > … > t_{K-1}` from `⌊cos((1-n)π/2)·T⌋` with
/// `n = k/K`.
pub fn cosine_steps(k: usize, steps: usize) -> Vec<usize> {
    let mut ts: Vec<usize> = (1..k)
        .map(|i| {
            let n = i as f64 / k as f64;
            let t = ((1.0 - n) * std::f64::consts::FRAC_PI_2).cos() * steps as f64;
            // absorb rounding so exact products such as 0.5·T floor correctly
            ((t + 1e-9).floor() as usize).clamp(1, steps)
        })
        .collect();
    ts.sort_unstable_by(|a, b| b.cmp(a));
    ts
}

/// Evenly spaced re-noising steps `T(1 - k/K)` for the many-step mode.
pub fn linear_steps(k: usize, steps: usize) -> Vec<usize> {
    (1..k)
        .map(|i| {
            let t = steps as f64 * (1.0 - i as f64 / k as f64);
            (t.round() as usize).clamp(1, steps)
        })
        .collect()
}
