//! Certified single-objective optima and the exact Pareto front of a small
//! instance.
//!
//! ```bash
//! cargo run --release --example exact_front
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::instance::{generate_instance, GeneratorConfig};
use sccmoco::oracle::{enumerate_pareto_exact, solve_exact, OracleConfig, OracleObjective};
use sccmoco::pareto::{hypervolume_norm, HvConfig};

fn main() -> sccmoco::Result<()> {
    let cfg = GeneratorConfig {
        num_users: 4,
        num_spaces: 2,
        num_mecs: 3,
        ..GeneratorConfig::desk()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inst = generate_instance(&cfg, "small", &mut rng)?;

    for obj in [OracleObjective::Latency, OracleObjective::Energy, OracleObjective::Tradeoff(2.0)] {
        let sol = solve_exact(&inst, &OracleConfig::new(obj))?;
        println!(
            "{obj:?}: value {:.4} (T {:.4}, E {:.4}) after {} nodes, certified {}",
            sol.value, sol.costs.total_latency, sol.costs.total_energy, sol.nodes, sol.certified
        );
    }

    let front = enumerate_pareto_exact(&inst, 10_000_000)?;
    let pts: Vec<_> = front.iter().map(|(p, _)| *p).collect();
    println!("exact front, {} points:", front.len());
    for (p, x) in &front {
        println!("  T {:9.4}  E {:9.4}  {:?}", p.t, p.e, x.triples(&inst));
    }
    let hv = HvConfig::auto([pts.as_slice()]);
    println!("normalized HV {:.4} at reference ({:.3}, {:.3})", hypervolume_norm(&pts, &hv), hv.t_ref, hv.e_ref);
    Ok(())
}
