//! Forward noise process: closed-form transition matrices, sampled
//! marginals and the few-step re-noising grid.
//!
//! ```bash
//! cargo run --release --example diffusion_schedule
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::neural::diffusion::{cosine_steps, linear_steps, BetaKind, NoiseSchedule};

fn main() -> sccmoco::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for kind in [BetaKind::LinearFlip, BetaKind::LinearStay] {
        let s = NoiseSchedule::new(kind, 1000, 0.2)?;
        println!("{kind:?} (anchor step {}):", s.anchor_step());
        for t in [1, 10, 100, 200, 500, 866, 1000] {
            let x0 = vec![1u8; 20_000];
            let xt = s.noise_sample(&x0, t, &mut rng);
            let kept = xt.iter().filter(|&&b| b == 1).count() as f64 / x0.len() as f64;
            println!("  t {t:>4}: stay prob {:.4}, sampled {:.4}", s.qbar(t)[1][1], kept);
        }
    }
    println!("cosine re-noising steps, K=3: {:?}", cosine_steps(3, 1000));
    println!("cosine re-noising steps, K=5: {:?}", cosine_steps(5, 1000));
    println!("linear re-noising steps, K=5: {:?}", linear_steps(5, 1000));
    Ok(())
}
