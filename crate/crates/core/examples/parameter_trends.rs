//! How latency- and energy-optimal placements change as base stations
//! spread out: local rate and replicas per space over a radius sweep.
//!
//! ```bash
//! cargo run --release --example parameter_trends
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::costmodel::{avg_placements, local_rate};
use sccmoco::instance::{generate_instance, GeneratorConfig, LocationSource};
use sccmoco::oracle::{solve_exact, OracleConfig, OracleObjective};

fn main() -> sccmoco::Result<()> {
    println!("{:>9} {:>10} {:>10} {:>10} {:>10}", "km", "rate T", "rate E", "place T", "place E");
    for radius in [5.0, 10.0, 20.0, 40.0, 80.0] {
        let mut cfg = GeneratorConfig::desk();
        if let LocationSource::Synthetic { radius_km, .. } = &mut cfg.locations {
            *radius_km = radius;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(radius as u64);
        let mut sums = [0.0; 5];
        let mut n = 0.0;
        for i in 0..20 {
            let inst = generate_instance(&cfg, &format!("r{i}"), &mut rng)?;
            if inst.num_pairs() == 0 {
                continue;
            }
            n += 1.0;
            sums[0] += inst.mean_intercell_km();
            for (k, obj) in [OracleObjective::Latency, OracleObjective::Energy].into_iter().enumerate() {
                let x = solve_exact(&inst, &OracleConfig::new(obj))?.x;
                sums[1 + k] += local_rate(&inst, &x)?;
                sums[3 + k] += avg_placements(&inst, &x);
            }
        }
        println!(
            "{:>9.1} {:>10.3} {:>10.3} {:>10.2} {:>10.2}",
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n,
            sums[4] / n
        );
    }
    Ok(())
}
