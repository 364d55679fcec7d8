use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sccmoco::costmodel::{
    avg_placements, cache_consistent, cache_from_assignment, evaluate, evaluate_with_cache, is_feasible, Assignment,
};
use sccmoco::heuristics::{repair, Marginals};
use sccmoco::instance::{generate_instance, validate_instance, GeneratorConfig, Instance};
use sccmoco::moea::decode;
use sccmoco::neural::diffusion::{cosine_steps, linear_steps, NoiseSchedule};
use sccmoco::pareto::{dominates, hypervolume_norm, nondominated_indices, HvConfig, ObjectivePoint, ParetoArchive};
use sccmoco::preference::{sample_dirichlet, sample_preference};

fn desk(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_instance(&GeneratorConfig::desk(), "p", &mut rng).unwrap()
}

fn random_mecs(inst: &Instance, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mecs: Vec<usize> = (0..inst.num_pairs()).map(|_| rng.gen_range(0..inst.num_mecs())).collect();
    Assignment::from_mecs(&mecs)
}

fn point() -> impl Strategy<Value = ObjectivePoint> {
    (0.0f64..2.0, 0.0f64..2.0).prop_map(|(t, e)| ObjectivePoint::new(t, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_validate(seed in any::<u64>()) {
        let inst = desk(seed);
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert!(is_feasible(&inst, &Assignment::all_local(&inst)));
        let json = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn costs_are_nonnegative_sums(seed in any::<u64>(), xs in any::<u64>()) {
        let inst = desk(seed);
        let x = random_mecs(&inst, xs);
        let c = evaluate(&inst, &x).unwrap();
        for v in [c.tau_sync, c.tau_compute, c.tau_cross, c.eps_maint, c.eps_sync, c.eps_compute, c.eps_cross, c.tau_edge, c.eps_edge] {
            prop_assert!(v >= 0.0 && v.is_finite());
        }
        prop_assert_eq!(c.total_latency, c.tau_sync + c.tau_compute + c.tau_cross);
        prop_assert_eq!(c.total_energy, c.eps_maint + c.eps_sync + c.eps_compute + c.eps_cross);
    }

    #[test]
    fn minimal_cache_matches_evaluate(seed in any::<u64>(), xs in any::<u64>()) {
        let inst = desk(seed);
        let x = random_mecs(&inst, xs);
        let y = cache_from_assignment(&inst, &x);
        prop_assert!(cache_consistent(&inst, &x, &y));
        let a = evaluate(&inst, &x).unwrap();
        let b = evaluate_with_cache(&inst, &x, &y).unwrap();
        prop_assert!((a.total_latency - b.total_latency).abs() <= 1e-12 * a.total_latency.max(1.0));
        prop_assert!((a.total_energy - b.total_energy).abs() <= 1e-12 * a.total_energy.max(1.0));
        let hosted: usize = y.y.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
        prop_assert!((avg_placements(&inst, &x) * inst.num_spaces() as f64 - hosted as f64).abs() < 1e-9);
    }

    #[test]
    fn repair_always_feasible(seed in any::<u64>(), q in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        let inst = desk(seed);
        let len = inst.num_pairs() * inst.num_mecs();
        let q: Vec<f64> = (0..len).map(|i| q[i % q.len()]).collect();
        let x = repair(&inst, &Marginals::new(inst.num_pairs(), inst.num_mecs(), q).unwrap()).unwrap();
        prop_assert!(is_feasible(&inst, &x));
    }

    #[test]
    fn repair_keeps_feasible_one_hot(seed in any::<u64>(), xs in any::<u64>()) {
        let inst = desk(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(xs);
        let x = sccmoco::heuristics::random_feasible(&inst, &mut rng);
        let back = repair(&inst, &Marginals::one_hot(&x, inst.num_mecs())).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn decoded_genotypes_are_feasible(seed in any::<u64>(), genes in prop::collection::vec(0usize..4, 0..40)) {
        let inst = desk(seed);
        let g: Vec<usize> = (0..inst.num_pairs()).map(|i| genes.get(i).copied().unwrap_or(0) % inst.num_mecs()).collect();
        prop_assert!(is_feasible(&inst, &decode(&inst, &g).unwrap()));
    }

    #[test]
    fn closed_form_matches_product(t in 1usize..=1000) {
        let s = NoiseSchedule::default_schedule();
        let a = s.qbar(t);
        let b = s.qbar_iterated(t);
        for i in 0..2 {
            prop_assert!((a[i][0] + a[i][1] - 1.0).abs() < 1e-12);
            for j in 0..2 {
                prop_assert!((a[i][j] - b[i][j]).abs() <= 1e-12);
            }
        }
        prop_assert!(a[0][0] >= 0.5 - 1e-12);
        if t > 1 {
            prop_assert!(s.stay_prob(t) <= s.stay_prob(t - 1));
        }
    }

    #[test]
    fn renoising_steps_descend(k in 1usize..50) {
        for steps in [cosine_steps(k, 1000), linear_steps(k, 1000)] {
            prop_assert_eq!(steps.len(), k - 1);
            prop_assert!(steps.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(steps.iter().all(|&t| (1..=1000).contains(&t)));
        }
    }

    #[test]
    fn preferences_on_simplex(seed in any::<u64>(), chi in prop::collection::vec(0.1f64..5.0, 2..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = sample_preference(&mut rng);
        prop_assert!((w.latency() + w.energy() - 1.0).abs() < 1e-12);
        prop_assert!(w.latency() >= 0.0 && w.energy() >= 0.0);
        let d = sample_dirichlet(&chi, &mut rng);
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hv_bounded_and_monotone(pts in prop::collection::vec(point(), 0..15), extra in point()) {
        let cfg = HvConfig::new(1.5, 1.5);
        let hv = hypervolume_norm(&pts, &cfg);
        prop_assert!((0.0..=1.0).contains(&hv));
        let mut more = pts.clone();
        more.push(extra);
        let hv2 = hypervolume_norm(&more, &cfg);
        prop_assert!(hv2 >= hv - 1e-12);
        if pts.iter().any(|p| dominates(p, &extra) || *p == extra) {
            prop_assert!((hv2 - hv).abs() <= 1e-12);
        }
    }

    #[test]
    fn nondominated_set_is_antichain(pts in prop::collection::vec(point(), 0..30)) {
        let idx = nondominated_indices(&pts);
        for &i in &idx {
            for &j in &idx {
                prop_assert!(!dominates(&pts[i], &pts[j]));
            }
        }
        for (k, p) in pts.iter().enumerate() {
            if !idx.contains(&k) {
                prop_assert!(idx.iter().any(|&i| dominates(&pts[i], p) || pts[i] == *p));
            }
        }
    }

    #[test]
    fn archive_hv_never_drops(pts in prop::collection::vec(point(), 1..40)) {
        let cfg = HvConfig::new(2.0, 2.0);
        let mut archive = ParetoArchive::new();
        let mut last = 0.0;
        for (k, p) in pts.iter().enumerate() {
            archive.insert("a", *p, k);
            let hv = archive.hypervolume("a", &cfg);
            prop_assert!(hv >= last);
            last = hv;
            let front = archive.points("a");
            for a in &front {
                prop_assert!(!front.iter().any(|b| dominates(b, a)));
            }
        }
    }
}
