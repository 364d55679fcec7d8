//! Random and Weight-Greedy fronts on a handful of desk instances.
//!
//! ```bash
//! cargo run --release --example baselines
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::heuristics::{front_from_tradeoffs, random_front, WEIGHT_GREEDY_TRADEOFFS};
use sccmoco::instance::{generate_instance, GeneratorConfig};
use sccmoco::pareto::{hypervolume_norm, HvConfig, ObjectivePoint};

fn main() -> sccmoco::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    println!("{:>6} {:>8} {:>8} {:>6} {:>6}", "inst", "HV rand", "HV wg", "|rand|", "|wg|");
    for i in 0..8 {
        let inst = generate_instance(&GeneratorConfig::desk(), &format!("b{i}"), &mut rng)?;
        let rand: Vec<ObjectivePoint> = random_front(&inst, 100, &mut rng)?.iter().map(|(p, _)| *p).collect();
        let wg: Vec<ObjectivePoint> = front_from_tradeoffs(&inst, &WEIGHT_GREEDY_TRADEOFFS)?.iter().map(|(p, _)| *p).collect();
        let hv = HvConfig::auto([rand.as_slice(), wg.as_slice()]);
        println!(
            "{:>6} {:>8.4} {:>8.4} {:>6} {:>6}",
            inst.id,
            hypervolume_norm(&rand, &hv),
            hypervolume_norm(&wg, &hv),
            rand.len(),
            wg.len()
        );
    }
    Ok(())
}
