//! NSGA-II and MOEA/D against the exact front.
//!
//! ```bash
//! cargo run --release --example evolutionary
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::instance::{generate_instance, GeneratorConfig};
use sccmoco::moea::{moead, nsga2, MoeaParams};
use sccmoco::oracle::enumerate_pareto_exact;
use sccmoco::pareto::{hypervolume_norm, HvConfig, ObjectivePoint};

fn main() -> sccmoco::Result<()> {
    let cfg = GeneratorConfig {
        num_users: 5,
        num_spaces: 2,
        num_mecs: 3,
        ..GeneratorConfig::desk()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = MoeaParams {
        generations: 100,
        ..MoeaParams::default()
    };
    for i in 0..5 {
        let inst = generate_instance(&cfg, &format!("e{i}"), &mut rng)?;
        let pts = |f: sccmoco::heuristics::Front| -> Vec<ObjectivePoint> { f.iter().map(|(p, _)| *p).collect() };
        let exact = pts(enumerate_pareto_exact(&inst, 50_000_000)?);
        let ns = pts(nsga2(&inst, &params)?);
        let md = pts(moead(&inst, &params)?);
        let hv = HvConfig::auto([exact.as_slice(), ns.as_slice(), md.as_slice()]);
        println!(
            "{}: exact {} pts HV {:.4} | NSGA-II {} pts HV {:.4} | MOEA/D {} pts HV {:.4}",
            inst.id,
            exact.len(),
            hypervolume_norm(&exact, &hv),
            ns.len(),
            hypervolume_norm(&ns, &hv),
            md.len(),
            hypervolume_norm(&md, &hv)
        );
    }
    Ok(())
}
