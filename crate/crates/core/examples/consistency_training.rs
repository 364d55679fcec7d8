//! Label instances with the exact oracle, train the graph denoiser as a
//! consistency model and sample with three steps.
//!
//! ```bash
//! cargo run --release --example consistency_training -- 200 5
//! ```

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::costmodel::evaluate;
use sccmoco::heuristics::random_feasible;
use sccmoco::instance::{generate_instance, GeneratorConfig, Instance};
use sccmoco::neural::checkpoint::Checkpoint;
use sccmoco::neural::diffusion::NoiseSchedule;
use sccmoco::neural::net::{DenoiserParams, NetConfig};
use sccmoco::neural::optim::AdamConfig;
use sccmoco::neural::sampling::{sample_steps, solve_with_model, StepRule};
use sccmoco::neural::train::{examples_from_labels, train_consistency, TrainConfig};
use sccmoco::oracle::label_dataset;
use sccmoco::preference::PreferenceWeight;

fn main() -> sccmoco::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let all: Vec<Instance> = (0..count + 20)
        .map(|i| generate_instance(&GeneratorConfig::desk(), &format!("i{i}"), &mut rng))
        .collect::<sccmoco::Result<_>>()?;
    let (train, test) = all.split_at(count);

    let start = Instant::now();
    let (labels, skipped) = label_dataset(train, 50_000_000);
    println!("{} labels ({skipped} skipped) in {:.1?}", labels.len(), start.elapsed());

    let examples = examples_from_labels(train, &labels)?;
    let schedule = NoiseSchedule::default_schedule();
    let mut params = DenoiserParams::init(NetConfig::desk(), &mut rng);
    let cfg = TrainConfig {
        epochs,
        batch_size: 16,
        adam: AdamConfig {
            lr: 1e-3,
            ..AdamConfig::default()
        },
    };
    train_consistency(&mut params, &examples, &schedule, &cfg, &mut rng, |e, loss| {
        println!("epoch {e}: loss {loss:.4} ({:.1?})", start.elapsed());
    })?;

    let steps = sample_steps(StepRule::Cosine, 3, schedule.steps());
    for w in [PreferenceWeight::LATENCY, PreferenceWeight::ENERGY] {
        let (mut model, mut random) = (0.0, 0.0);
        for inst in test {
            let x = solve_with_model(&params, inst, w, &steps, &schedule, &mut rng)?;
            let c = evaluate(inst, &x)?;
            model += w.latency() * c.total_latency + w.energy() * c.total_energy;
            let c = evaluate(inst, &random_feasible(inst, &mut rng))?;
            random += w.latency() * c.total_latency + w.energy() * c.total_energy;
        }
        let n = test.len() as f64;
        println!("w={:?}: model {:.3} vs random {:.3} (mean objective)", w.as_array(), model / n, random / n);
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("model.json");
    Checkpoint::new(&params, &schedule).save(&path)?;
    let back = Checkpoint::load(&path)?.denoiser()?;
    println!("checkpoint round trip: {} parameters, identical {}", back.len(), back.data == params.data);
    Ok(())
}
