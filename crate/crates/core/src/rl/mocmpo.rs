//! The fine-tuning loop: per-objective PPO, distillation into the global
//! policy and an insert-only Pareto archive.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{evaluate, Assignment};
use crate::error::Result;
use crate::heuristics::{repair, Front, Marginals};
use crate::instance::Instance;
use crate::io::append_jsonl;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::diffusion::NoiseSchedule;
use crate::neural::graph::build_graph;
use crate::neural::net::DenoiserParams;
use crate::neural::optim::AdamConfig;
use crate::neural::sampling::{consistency_sample, sample_steps};
use crate::pareto::{nondominated_front, HvConfig, HvMode, ParetoArchive};
use crate::preference::PreferenceWeight;
use crate::rl::buffer::fill_buffer;
use crate::rl::critic::Critic;
use crate::rl::distill::{distill_targets, kl_distill};
use crate::rl::ppo::{ppo_update, PpoConfig, PpoReport};

/// One JSON line of the fine-tuning log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub j: usize,
    #[serde(rename = "mean_reward_T")]
    pub mean_reward_t: f64,
    #[serde(rename = "mean_reward_E")]
    pub mean_reward_e: f64,
    pub policy_loss_1: f64,
    pub policy_loss_2: f64,
    pub value_loss_1: f64,
    pub value_loss_2: f64,
    pub kl_loss: f64,
    pub archive_hv_per_instance: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default)]
pub struct MoCmpoOutput {
    pub log_path: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    /// Copied into every checkpoint's `meta`.
    pub meta: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct MoCmpoResult {
    pub params: DenoiserParams,
    pub critics: [Critic; 2],
    pub archive: ParetoArchive<Assignment>,
    /// Per-instance `[T_ref, E_ref]` used for rewards and hypervolume.
    pub refs: Vec<[f64; 2]>,
    pub initial_hv: BTreeMap<String, f64>,
    pub log: Vec<IterationLog>,
}

impl MoCmpoResult {
    pub fn hv_config(&self, instance: usize) -> HvConfig {
        ref_config(self.refs[instance])
    }
}

fn ref_config(r: [f64; 2]) -> HvConfig {
    HvConfig {
        t_ref: r[0],
        e_ref: r[1],
        mode: HvMode::Auto,
    }
}

/// `count` preference weights from latency-only to energy-only.
pub fn preference_sweep(count: usize) -> Vec<PreferenceWeight> {
    match count {
        0 => Vec::new(),
        1 => vec![PreferenceWeight::new(0.5)],
        _ => (0..count)
            .map(|i| PreferenceWeight::new(1.0 - i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Samples the policy `repeats` times per swept preference weight and
/// repairs each sample; returns the non-dominated points.
pub fn policy_front<R: Rng + ?Sized>(
    params: &DenoiserParams,
    inst: &Instance,
    sweep: &[PreferenceWeight],
    repeats: usize,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Front> {
    let g = build_graph(inst, PreferenceWeight::new(0.5));
    let mut entries = Vec::with_capacity(sweep.len() * repeats);
    for _ in 0..repeats {
        for &w in sweep {
            let out = consistency_sample(params, &g.with_pref(w), steps, schedule, rng)?;
            let x = repair(inst, &Marginals::new(inst.num_pairs(), inst.num_mecs(), out.probs)?)?;
            entries.push((evaluate(inst, &x)?.point(), x));
        }
    }
    Ok(nondominated_front(entries))
}

fn refresh_archive<R: Rng + ?Sized>(
    archive: &mut ParetoArchive<Assignment>,
    params: &DenoiserParams,
    instances: &[Instance],
    cfg: &PpoConfig,
    steps: &[usize],
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<()> {
    let sweep = preference_sweep(cfg.archive_sweep);
    let seeds: Vec<u64> = instances.iter().map(|_| rng.gen()).collect();
    let fronts: Vec<Result<Front>> = instances
        .par_iter()
        .zip(&seeds)
        .map(|(inst, &seed)| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            policy_front(params, inst, &sweep, 1, steps, schedule, &mut r)
        })
        .collect();
    for (inst, front) in instances.iter().zip(fronts) {
        for (p, x) in front? {
            archive.insert(&inst.id, p, x);
        }
    }
    Ok(())
}

fn archive_hv(archive: &ParetoArchive<Assignment>, instances: &[Instance], refs: &[[f64; 2]]) -> BTreeMap<String, f64> {
    instances
        .iter()
        .zip(refs)
        .map(|(inst, &r)| (inst.id.clone(), archive.hypervolume(&inst.id, &ref_config(r))))
        .collect()
}

/// Fine-tunes `pretrained` for `cfg.iterations` rounds. The archive starts
/// from rollouts of the pretrained policy; reward references are fixed at
/// 1.1 times the nadir of that initial archive.
pub fn mo_cmpo<R: Rng + ?Sized>(
    pretrained: &DenoiserParams,
    instances: &[Instance],
    schedule: &NoiseSchedule,
    cfg: &PpoConfig,
    output: &MoCmpoOutput,
    rng: &mut R,
) -> Result<MoCmpoResult> {
    cfg.validate()?;
    let steps = sample_steps(cfg.step_rule, cfg.inference_steps, schedule.steps());
    let mut params = pretrained.clone();
    let mut archive = ParetoArchive::new();
    refresh_archive(&mut archive, &params, instances, cfg, &steps, schedule, rng)?;
    let refs: Vec<[f64; 2]> = instances
        .iter()
        .map(|inst| {
            let hv = HvConfig::auto(std::iter::once(archive.points(&inst.id).as_slice()));
            [hv.t_ref, hv.e_ref]
        })
        .collect();
    let initial_hv = archive_hv(&archive, instances, &refs);
    let input = 2 * params.cfg.hidden + 2;
    let mut critics = [
        Critic::new(input, cfg.critic_hidden, rng),
        Critic::new(input, cfg.critic_hidden, rng),
    ];
    let distill_adam = AdamConfig {
        lr: cfg.distill_lr,
        weight_decay: 0.0,
        ..AdamConfig::default()
    };
    let mut log = Vec::with_capacity(cfg.iterations);
    for j in 1..=cfg.iterations {
        let buffer = fill_buffer(&params, instances, &refs, cfg.buffer_size, &steps, schedule, rng)?;
        let mut heads = [params.clone(), params.clone()];
        let mut reports = [PpoReport::default(); 2];
        if !buffer.is_empty() {
            for i in 0..2 {
                reports[i] = ppo_update(&mut heads[i], &mut critics[i], &buffer, i, cfg, rng)?;
            }
        }
        let states: Vec<_> = buffer
            .transitions
            .iter()
            .map(|tr| (Arc::clone(&tr.graph), tr.t, tr.state.clone()))
            .collect();
        let targets = distill_targets(&states, &[&heads[0], &heads[1]], &params)?;
        let kl_loss = kl_distill(
            &mut params,
            &targets,
            cfg.anchor_weight,
            distill_adam,
            cfg.distill_epochs,
            cfg.minibatch,
            rng,
        )?;
        refresh_archive(&mut archive, &params, instances, cfg, &steps, schedule, rng)?;
        let mean = buffer.mean_episode_reward();
        let entry = IterationLog {
            j,
            mean_reward_t: mean[0],
            mean_reward_e: mean[1],
            policy_loss_1: reports[0].policy_loss,
            policy_loss_2: reports[1].policy_loss,
            value_loss_1: reports[0].value_loss,
            value_loss_2: reports[1].value_loss,
            kl_loss,
            archive_hv_per_instance: archive_hv(&archive, instances, &refs),
        };
        log::info!("iteration {j}: kl {kl_loss:.4e}, reward [{:.3}, {:.3}]", mean[0], mean[1]);
        if let Some(path) = &output.log_path {
            append_jsonl(path, &entry)?;
        }
        if let Some(dir) = &output.checkpoint_dir {
            let mut ck = Checkpoint::new(&params, schedule);
            ck.critics = critics.iter().map(Critic::snapshot).collect();
            ck.meta = serde_json::json!({ "iteration": j, "run": output.meta });
            ck.save(&dir.join(format!("iter_{j:03}.json")))?;
        }
        log.push(entry);
    }
    Ok(MoCmpoResult {
        params,
        critics,
        archive,
        refs,
        initial_hv,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::is_feasible;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::io::read_jsonl;
    use crate::neural::net::NetConfig;

    fn setup() -> (DenoiserParams, Vec<Instance>) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let insts = (0..2)
            .map(|i| generate_instance(&GeneratorConfig::desk(), &format!("m{i}"), &mut rng).unwrap())
            .collect();
        let cfg = NetConfig {
            layers: 1,
            hidden: 8,
            time_dim: 4,
        };
        (DenoiserParams::init(cfg, &mut rng), insts)
    }

    fn small() -> PpoConfig {
        PpoConfig {
            buffer_size: 12,
            iterations: 3,
            minibatch: 6,
            archive_sweep: 3,
            policy_lr: 1e-3,
            distill_lr: 1e-3,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn zero_iterations_keep_pretrained() {
        let (p, insts) = setup();
        let cfg = PpoConfig {
            iterations: 0,
            ..small()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sched = NoiseSchedule::default_schedule();
        let r = mo_cmpo(&p, &insts, &sched, &cfg, &MoCmpoOutput::default(), &mut rng).unwrap();
        assert_eq!(r.params, p);
        assert!(r.log.is_empty());
        assert_eq!(r.archive.len(), 2);
        for inst in &insts {
            assert!(!r.archive.front(&inst.id).is_empty());
        }
    }

    #[test]
    fn archive_hv_is_monotone_and_files_are_written() {
        let (p, insts) = setup();
        let dir = tempfile::tempdir().unwrap();
        let out = MoCmpoOutput {
            log_path: Some(dir.path().join("log.jsonl")),
            checkpoint_dir: Some(dir.path().join("ck")),
            meta: serde_json::json!({"seed": 1}),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sched = NoiseSchedule::default_schedule();
        let r = mo_cmpo(&p, &insts, &sched, &small(), &out, &mut rng).unwrap();
        assert_eq!(r.log.len(), 3);
        assert_ne!(r.params, p);
        let mut prev = r.initial_hv.clone();
        for entry in &r.log {
            for (id, hv) in &entry.archive_hv_per_instance {
                assert!(*hv >= prev[id]);
            }
            prev = entry.archive_hv_per_instance.clone();
        }
        let lines: Vec<IterationLog> = read_jsonl(&dir.path().join("log.jsonl")).unwrap();
        assert_eq!(lines, r.log);
        let ck = Checkpoint::load(&dir.path().join("ck/iter_003.json")).unwrap();
        assert_eq!(ck.denoiser().unwrap(), r.params);
        assert_eq!(ck.critics.len(), 2);
        for (i, inst) in insts.iter().enumerate() {
            for (pt, x) in r.archive.front(&inst.id) {
                assert!(is_feasible(inst, x));
                assert_eq!(evaluate(inst, x).unwrap().point(), *pt);
            }
            assert!(r.hv_config(i).t_ref > 0.0);
        }
    }

    #[test]
    fn zero_learning_rates_are_bit_identical() {
        let (p, insts) = setup();
        let cfg = PpoConfig {
            policy_lr: 0.0,
            critic_lr: 0.0,
            distill_lr: 0.0,
            ..small()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sched = NoiseSchedule::default_schedule();
        let r = mo_cmpo(&p, &insts, &sched, &cfg, &MoCmpoOutput::default(), &mut rng).unwrap();
        assert_eq!(r.params.data, p.data);
    }

    #[test]
    fn sweep_endpoints() {
        let s = preference_sweep(3);
        assert_eq!(s[0], PreferenceWeight::LATENCY);
        assert_eq!(s[1], PreferenceWeight::new(0.5));
        assert_eq!(s[2], PreferenceWeight::ENERGY);
    }
}
