//! Inference-as-MDP rollouts and the replay buffer they fill.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::costmodel::{evaluate, Assignment, CostBreakdown};
use crate::error::Result;
use crate::heuristics::{repair, Marginals};
use crate::instance::Instance;
use crate::neural::diffusion::NoiseSchedule;
use crate::neural::graph::{build_graph, HeteroGraph};
use crate::neural::net::{forward, DenoiserParams};
use crate::preference::{sample_preference, PreferenceWeight};
use crate::rl::policy::policy_logprob;

/// One `(s_k, a_k, r_{k+1})` step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub instance: usize,
    pub graph: Arc<HeteroGraph>,
    pub k: usize,
    pub horizon: usize,
    /// Diffusion step of the state.
    pub t: usize,
    pub state: Vec<u8>,
    pub action: Vec<u8>,
    pub behavior_logprob: f64,
    /// Zero unless `k = K-1`.
    pub reward: [f64; 2],
    /// Episode reward `r_K`, shared by every step of the rollout.
    pub terminal_reward: [f64; 2],
    /// Pooled embeddings of `s_{K-1}` followed by the preference.
    pub critic_input: Arc<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub transitions: Vec<Transition>,
    pub solution: Assignment,
    pub costs: CostBreakdown,
    /// `[-T, -E]` in raw units.
    pub reward: [f64; 2],
}

/// Runs `K = steps.len() + 1` policy steps. Actions are Bernoulli draws from
/// the denoiser probabilities; the last action blended with its
/// probabilities is repaired into the solution.
pub fn rollout<R: Rng + ?Sized>(
    params: &DenoiserParams,
    inst: &Instance,
    w: PreferenceWeight,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Rollout> {
    let graph = Arc::new(build_graph(inst, w));
    let n = graph.num_vars();
    let horizon = steps.len() + 1;
    let mut state: Vec<u8> = (0..n).map(|_| rng.gen::<bool>() as u8).collect();
    let mut t = schedule.steps();
    let mut transitions = Vec::with_capacity(horizon);
    let mut last = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..horizon {
        let tr = forward(params, &graph, &state, t)?;
        let probs = tr.probs();
        let action: Vec<u8> = probs.iter().map(|&p| rng.gen_bool(p) as u8).collect();
        let behavior_logprob = policy_logprob(&tr.logits, &action);
        transitions.push(Transition {
            instance: 0,
            graph: graph.clone(),
            k,
            horizon,
            t,
            state: state.clone(),
            action: action.clone(),
            behavior_logprob,
            reward: [0.0; 2],
            terminal_reward: [0.0; 2],
            critic_input: Arc::new(Vec::new()),
        });
        if k + 1 < horizon {
            t = steps[k];
            state = schedule.noise_sample(&action, t, rng);
        } else {
            last = (tr.pooled(), probs, action);
        }
    }
    let (mut pooled, probs, action) = last;
    pooled.extend(w.as_array());
    let q: Vec<f64> = probs
        .iter()
        .zip(&action)
        .map(|(&p, &a)| 0.5 * (p + a as f64))
        .collect();
    let solution = repair(inst, &Marginals::new(inst.num_pairs(), inst.num_mecs(), q)?)?;
    let costs = evaluate(inst, &solution)?;
    let reward = [-costs.total_latency, -costs.total_energy];
    let critic_input = Arc::new(pooled);
    for tr in &mut transitions {
        tr.terminal_reward = reward;
        tr.critic_input = critic_input.clone();
    }
    if let Some(tr) = transitions.last_mut() {
        tr.reward = reward;
    }
    Ok(Rollout {
        transitions,
        solution,
        costs,
        reward,
    })
}

/// Divides each reward component by its reference magnitude.
pub fn normalize_reward(reward: [f64; 2], refs: [f64; 2]) -> [f64; 2] {
    let scale = |r: f64| if r > 0.0 { r } else { 1.0 };
    [reward[0] / scale(refs[0]), reward[1] / scale(refs[1])]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayBuffer {
    pub capacity: usize,
    pub transitions: Vec<Transition>,
    /// Raw episode rewards, one per rollout.
    pub episode_rewards: Vec<[f64; 2]>,
}

impl ReplayBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn mean_episode_reward(&self) -> [f64; 2] {
        let n = self.episode_rewards.len().max(1) as f64;
        let mut acc = [0.0; 2];
        for r in &self.episode_rewards {
            acc[0] += r[0] / n;
            acc[1] += r[1] / n;
        }
        acc
    }
}

/// Rolls out `⌈capacity / K⌉` episodes on uniformly drawn instances and
/// preferences, then truncates to `capacity`. Each episode gets its own seed
/// stream so the result does not depend on the thread count. Rewards are
/// normalized by `refs[instance]`.
pub fn fill_buffer<R: Rng + ?Sized>(
    params: &DenoiserParams,
    instances: &[Instance],
    refs: &[[f64; 2]],
    capacity: usize,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<ReplayBuffer> {
    assert_eq!(instances.len(), refs.len());
    let horizon = steps.len() + 1;
    let episodes = if instances.is_empty() {
        0
    } else {
        capacity.div_ceil(horizon)
    };
    let plan: Vec<(usize, PreferenceWeight, u64)> = (0..episodes)
        .map(|_| {
            let i = rng.gen_range(0..instances.len());
            let w = sample_preference(rng);
            (i, w, rng.gen())
        })
        .collect();
    let rollouts: Vec<Result<(usize, Rollout)>> = plan
        .par_iter()
        .map(|&(i, w, seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            rollout(params, &instances[i], w, steps, schedule, &mut r).map(|ro| (i, ro))
        })
        .collect();
    let mut buf = ReplayBuffer {
        capacity,
        ..Default::default()
    };
    for item in rollouts {
        let (i, ro) = item?;
        let norm = normalize_reward(ro.reward, refs[i]);
        buf.episode_rewards.push(ro.reward);
        for mut tr in ro.transitions {
            tr.instance = i;
            tr.terminal_reward = norm;
            if tr.k + 1 == tr.horizon {
                tr.reward = norm;
            }
            buf.transitions.push(tr);
        }
    }
    buf.transitions.truncate(capacity);
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::is_feasible;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::neural::diffusion::cosine_steps;
    use crate::neural::net::NetConfig;

    fn setup(seed: u64) -> (DenoiserParams, Vec<Instance>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let insts = (0..3)
            .map(|i| generate_instance(&GeneratorConfig::desk(), &format!("b{i}"), &mut rng).unwrap())
            .collect();
        let cfg = NetConfig {
            layers: 1,
            hidden: 8,
            time_dim: 4,
        };
        (DenoiserParams::init(cfg, &mut rng), insts)
    }

    #[test]
    fn single_step_carries_terminal_reward() {
        let (p, insts) = setup(1);
        let sched = NoiseSchedule::default_schedule();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ro = rollout(&p, &insts[0], PreferenceWeight::new(0.3), &[], &sched, &mut rng).unwrap();
        assert_eq!(ro.transitions.len(), 1);
        assert_eq!(ro.transitions[0].reward, ro.reward);
        assert!(is_feasible(&insts[0], &ro.solution));
        assert_eq!(ro.reward, [-ro.costs.total_latency, -ro.costs.total_energy]);
    }

    #[test]
    fn rewards_only_at_the_end() {
        let (p, insts) = setup(3);
        let sched = NoiseSchedule::default_schedule();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for inst in &insts {
            let ro = rollout(&p, inst, PreferenceWeight::ENERGY, &cosine_steps(3, 1000), &sched, &mut rng).unwrap();
            assert_eq!(ro.transitions.len(), 3);
            assert_eq!(ro.transitions[0].reward, [0.0; 2]);
            assert_eq!(ro.transitions[1].reward, [0.0; 2]);
            assert_eq!(ro.transitions[2].reward, ro.reward);
            assert_eq!((ro.transitions[1].t, ro.transitions[2].t), (866, 500));
            assert!(is_feasible(inst, &ro.solution));
            let lp: f64 = ro.transitions[2].behavior_logprob;
            assert!(lp <= 0.0 && lp.is_finite());
        }
    }

    #[test]
    fn empty_instance_has_zero_reward() {
        let (p, insts) = setup(5);
        let mut inst = insts[0].clone();
        for row in &mut inst.p {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        let sched = NoiseSchedule::default_schedule();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ro = rollout(&p, &inst, PreferenceWeight::LATENCY, &[500], &sched, &mut rng).unwrap();
        assert_eq!(ro.solution.len(), 0);
        assert_eq!(ro.reward, [0.0, 0.0]);
    }

    #[test]
    fn buffer_counts_and_determinism() {
        let (p, insts) = setup(6);
        let refs = vec![[10.0, 10.0]; insts.len()];
        let sched = NoiseSchedule::default_schedule();
        let steps = cosine_steps(3, 1000);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let buf = fill_buffer(&p, &insts, &refs, 10, &steps, &sched, &mut a).unwrap();
        assert_eq!(buf.len(), 10);
        assert_eq!(buf.episode_rewards.len(), 4);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(buf, fill_buffer(&p, &insts, &refs, 10, &steps, &sched, &mut b).unwrap());
        let empty = fill_buffer(&p, &insts, &refs, 0, &steps, &sched, &mut b).unwrap();
        assert!(empty.is_empty() && empty.episode_rewards.is_empty());
        for tr in &buf.transitions {
            assert!(tr.terminal_reward[0] <= 0.0 && tr.terminal_reward[1] <= 0.0);
        }
    }
}
