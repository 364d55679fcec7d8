//! Preference-conditioned PPO fine-tuning with distillation and a Pareto
//! archive, starting from a briefly pretrained denoiser.
//!
//! ```bash
//! cargo run --release --example mocmpo_finetune -- 3
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::instance::{generate_instance, GeneratorConfig, Instance};
use sccmoco::neural::diffusion::NoiseSchedule;
use sccmoco::neural::net::{DenoiserParams, NetConfig};
use sccmoco::neural::optim::AdamConfig;
use sccmoco::neural::train::{examples_from_labels, train_consistency, TrainConfig};
use sccmoco::oracle::label_dataset;
use sccmoco::rl::{mo_cmpo, MoCmpoOutput, PpoConfig};

fn main() -> sccmoco::Result<()> {
    let iterations: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let all: Vec<Instance> = (0..120)
        .map(|i| generate_instance(&GeneratorConfig::desk(), &format!("f{i}"), &mut rng))
        .collect::<sccmoco::Result<_>>()?;
    let (train, tune) = all.split_at(100);

    let (labels, _) = label_dataset(train, 50_000_000);
    let examples = examples_from_labels(train, &labels)?;
    let schedule = NoiseSchedule::default_schedule();
    let mut params = DenoiserParams::init(NetConfig::desk(), &mut rng);
    let tc = TrainConfig {
        epochs: 3,
        batch_size: 16,
        adam: AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        },
    };
    train_consistency(&mut params, &examples, &schedule, &tc, &mut rng, |_, _| {})?;

    let cfg = PpoConfig {
        iterations,
        buffer_size: 256,
        ..PpoConfig::desk()
    };
    let dir = tempfile::tempdir().expect("temp dir");
    let out = MoCmpoOutput {
        log_path: Some(dir.path().join("log.jsonl")),
        checkpoint_dir: Some(dir.path().join("checkpoints")),
        meta: serde_json::json!({ "run": "example" }),
    };
    let res = mo_cmpo(&params, tune, &schedule, &cfg, &out, &mut rng)?;
    let mean = |m: &std::collections::BTreeMap<String, f64>| m.values().sum::<f64>() / m.len().max(1) as f64;
    println!("initial archive HV {:.4}", mean(&res.initial_hv));
    for rec in &res.log {
        println!(
            "iter {}: reward T {:.3} E {:.3} | policy loss {:.4}/{:.4} | value loss {:.4}/{:.4} | KL {:.5} | archive HV {:.4}",
            rec.j,
            rec.mean_reward_t,
            rec.mean_reward_e,
            rec.policy_loss_1,
            rec.policy_loss_2,
            rec.value_loss_1,
            rec.value_loss_2,
            rec.kl_loss,
            mean(&rec.archive_hv_per_instance)
        );
    }
    let entries: usize = res.archive.instance_ids().map(|id| res.archive.front(id).len()).sum();
    println!("archive holds {entries} non-dominated solutions over {} instances", res.archive.len());
    let ckpts = std::fs::read_dir(dir.path().join("checkpoints")).map(|d| d.count()).unwrap_or(0);
    println!("{ckpts} checkpoints written");
    Ok(())
}
