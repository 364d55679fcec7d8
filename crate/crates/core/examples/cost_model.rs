//! Generate one desk-scale instance and price a few placements.
//!
//! ```bash
//! cargo run --release --example cost_model
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::costmodel::{avg_placements, check_feasible, evaluate, local_rate, Assignment};
use sccmoco::heuristics::{greedy_weighted, random_feasible};
use sccmoco::costmodel::ObjectiveWeights;
use sccmoco::instance::{generate_instance, GeneratorConfig};

fn main() -> sccmoco::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = generate_instance(&GeneratorConfig::desk(), "demo", &mut rng)?;
    println!(
        "{} users, {} spaces, {} MECs, {} admissible pairs, mean inter-cell distance {:.1} km",
        inst.num_users(),
        inst.num_spaces(),
        inst.num_mecs(),
        inst.num_pairs(),
        inst.mean_intercell_km()
    );

    let candidates = [
        ("all local", Assignment::all_local(&inst)),
        ("random", random_feasible(&inst, &mut rng)),
        ("latency greedy", greedy_weighted(&inst, ObjectiveWeights::LATENCY)?),
        ("energy greedy", greedy_weighted(&inst, ObjectiveWeights::ENERGY)?),
    ];
    for (name, x) in &candidates {
        let c = evaluate(&inst, x)?;
        println!(
            "{name:>15}: T {:8.3} ms (sync {:.3}, compute {:.3}, cross {:.3})  E {:8.3} J (maint {:.1}, sync {:.3}, compute {:.3}, cross {:.3})",
            c.total_latency,
            c.tau_sync,
            c.tau_compute,
            c.tau_cross,
            c.total_energy,
            c.eps_maint,
            c.eps_sync,
            c.eps_compute,
            c.eps_cross
        );
        println!(
            "{:>15}  local rate {:.2}, {:.2} replicas per space, {} violations",
            "",
            local_rate(&inst, x).unwrap_or(f64::NAN),
            avg_placements(&inst, x),
            check_feasible(&inst, x).len()
        );
    }
    Ok(())
}
