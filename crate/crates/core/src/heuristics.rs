//! Feasible-solution constructors: uniform random placements, the
//! trade-off greedy baseline and the greedy projection of fractional
//! marginals onto the feasible set.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::costmodel::{evaluate, Assignment, ObjectiveWeights, PartialPlacement};
use crate::error::{Error, Result};
use crate::instance::{all_local_feasible, Instance, Pair};
use crate::pareto::{nondominated_front, ObjectivePoint};

/// Trade-off factors swept by the greedy baseline.
pub const WEIGHT_GREEDY_TRADEOFFS: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0];

const RANDOM_RETRIES: usize = 50;

/// A front: non-dominated points with the placement that produced each.
pub type Front = Vec<(ObjectivePoint, Assignment)>;

/// Per-(pair, MEC) probabilities, row-major over pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    num_mecs: usize,
    q: Vec<f64>,
}

impl Marginals {
    pub fn new(num_pairs: usize, num_mecs: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != num_pairs * num_mecs {
            return Err(Error::Dimension(format!(
                "{} marginals for {num_pairs} pairs x {num_mecs} MECs",
                q.len()
            )));
        }
        if let Some(bad) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Dimension(format!("marginal {bad} outside [0, 1]")));
        }
        Ok(Marginals { num_mecs, q })
    }

    pub fn uniform(inst: &Instance) -> Self {
        let m = inst.num_mecs();
        Marginals {
            num_mecs: m,
            q: vec![if m > 0 { 1.0 / m as f64 } else { 0.0 }; inst.num_pairs() * m],
        }
    }

    /// Indicator marginals of a placement.
    pub fn one_hot(x: &Assignment, num_mecs: usize) -> Self {
        let mut q = vec![0.0; x.len() * num_mecs];
        for (i, s) in x.slots().iter().enumerate() {
            if let Some(m) = s {
                q[i * num_mecs + m] = 1.0;
            }
        }
        Marginals { num_mecs, q }
    }

    pub fn get(&self, pair: usize, m: usize) -> f64 {
        self.q[pair * self.num_mecs + m]
    }

    pub fn row(&self, pair: usize) -> &[f64] {
        &self.q[pair * self.num_mecs..(pair + 1) * self.num_mecs]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn num_pairs(&self) -> usize {
        if self.num_mecs == 0 {
            0
        } else {
            self.q.len() / self.num_mecs
        }
    }

    pub fn num_mecs(&self) -> usize {
        self.num_mecs
    }
}

fn fallback(inst: &Instance) -> Result<Assignment> {
    if all_local_feasible(inst) {
        Ok(Assignment::all_local(inst))
    } else {
        Err(Error::InfeasibleInstance(
            "all-local placement violates capacity".into(),
        ))
    }
}

/// Uniform choice among currently feasible MECs for each pair in random
/// order; whole-construction retries on dead ends.
pub fn random_feasible<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Assignment {
    let pairs = inst.pairs();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    'attempt: for _ in 0..RANDOM_RETRIES {
        order.shuffle(rng);
        let mut state = PartialPlacement::new(inst);
        let mut x = Assignment::empty(pairs.len());
        for &i in &order {
            let space = pairs[i].space;
            let options: Vec<usize> = (0..inst.num_mecs())
                .filter(|&m| state.can_place(space, m))
                .collect();
            let Some(&m) = options.choose(rng) else {
                continue 'attempt;
            };
            state.place(space, m);
            x.set(i, Some(m));
        }
        return x;
    }
    Assignment::all_local(inst)
}

/// Best MEC for `pair` among `allowed`, by marginal then open replica, then
/// local MEC, then index.
fn pick_by_marginal(
    inst: &Instance,
    state: &PartialPlacement,
    pair: &Pair,
    row: &[f64],
    require_positive: bool,
) -> Option<usize> {
    let local = inst.users[pair.user].local_mec;
    let mut best: Option<(usize, (f64, bool, bool))> = None;
    for m in 0..inst.num_mecs() {
        if (require_positive && row[m] <= 0.0) || !state.can_place(pair.space, m) {
            continue;
        }
        let key = (row[m], state.is_open(pair.space, m), m == local);
        let better = match &best {
            None => true,
            Some((_, k)) => {
                key.0 > k.0
                    || (key.0 == k.0 && (key.1 && !k.1 || (key.1 == k.1 && key.2 && !k.2)))
            }
        };
        if better {
            best = Some((m, key));
        }
    }
    best.map(|(m, _)| m)
}

/// Greedy projection of marginals onto a feasible placement.
///
/// Pairs go in descending order of their largest marginal. A first pass
/// uses only MECs with positive marginal; pairs it cannot place are retried
/// on any MEC with room. If that still fails the all-local placement is
/// returned.
pub fn repair(inst: &Instance, q: &Marginals) -> Result<Assignment> {
    let pairs = inst.pairs();
    if q.num_pairs() != pairs.len() || (q.num_mecs() != inst.num_mecs() && !pairs.is_empty()) {
        return Err(Error::Dimension("marginals do not match the instance".into()));
    }
    let top: Vec<f64> = (0..pairs.len())
        .map(|i| q.row(i).iter().copied().fold(0.0, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| top[b].total_cmp(&top[a]));

    let mut state = PartialPlacement::new(inst);
    let mut x = Assignment::empty(pairs.len());
    let mut deferred = Vec::new();
    for &i in &order {
        match pick_by_marginal(inst, &state, &pairs[i], q.row(i), true) {
            Some(m) => {
                state.place(pairs[i].space, m);
                x.set(i, Some(m));
            }
            None => deferred.push(i),
        }
    }
    for &i in &deferred {
        match pick_by_marginal(inst, &state, &pairs[i], q.row(i), false) {
            Some(m) => {
                state.place(pairs[i].space, m);
                x.set(i, Some(m));
            }
            None => return fallback(inst),
        }
    }
    Ok(x)
}

/// Pairs in descending request probability, each on the feasible MEC with
/// the smallest exact increase of the weighted objective.
pub fn greedy_weighted(inst: &Instance, w: ObjectiveWeights) -> Result<Assignment> {
    let pairs = inst.pairs();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[b].prob.total_cmp(&pairs[a].prob));
    let mut state = PartialPlacement::new(inst);
    let mut x = Assignment::empty(pairs.len());
    for &i in &order {
        let pair = &pairs[i];
        let mut best: Option<(usize, f64)> = None;
        for m in 0..inst.num_mecs() {
            if !state.can_place(pair.space, m) {
                continue;
            }
            let d = state.delta(pair, m, w);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((m, d));
            }
        }
        let Some((m, _)) = best else {
            return fallback(inst);
        };
        state.place(pair.space, m);
        x.set(i, Some(m));
    }
    Ok(x)
}

/// Greedy minimization of `T + ℓ·E`.
pub fn weight_greedy(inst: &Instance, ell: f64) -> Result<Assignment> {
    if !(ell >= 0.0) {
        return Err(Error::InvalidConfig(format!("trade-off factor {ell} must be >= 0")));
    }
    greedy_weighted(inst, ObjectiveWeights::tradeoff(ell))
}

/// Non-dominated set of the greedy placements over the given trade-offs.
pub fn front_from_tradeoffs(inst: &Instance, ells: &[f64]) -> Result<Front> {
    let mut entries = Vec::with_capacity(ells.len());
    for &ell in ells {
        let x = weight_greedy(inst, ell)?;
        entries.push((evaluate(inst, &x)?.point(), x));
    }
    Ok(nondominated_front(entries))
}

/// Non-dominated set of `draws` random feasible placements.
pub fn random_front<R: Rng + ?Sized>(inst: &Instance, draws: usize, rng: &mut R) -> Result<Front> {
    let mut entries = Vec::with_capacity(draws);
    for _ in 0..draws {
        let x = random_feasible(inst, rng);
        entries.push((evaluate(inst, &x)?.point(), x));
    }
    Ok(nondominated_front(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{check_feasible, is_feasible, scalarize_tradeoff};
    use crate::fixtures::two_mec_instance;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::pareto::dominates;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_instance(&GeneratorConfig::desk(), &format!("d{seed}"), &mut rng).unwrap()
    }

    #[test]
    fn random_on_single_mec_and_empty() {
        let mut inst = two_mec_instance(3);
        inst.mecs.truncate(1);
        for u in &mut inst.users {
            u.local_mec = 0;
        }
        inst.links.sync_latency = vec![vec![0.0]];
        inst.links.sync_energy = vec![vec![0.0]];
        for r in inst.links.sensor_latency.iter_mut().chain(inst.links.sensor_energy.iter_mut()) {
            r.truncate(1);
        }
        inst.links.frame_latency_coeff.truncate(1);
        inst.links.frame_energy_coeff.truncate(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(random_feasible(&inst, &mut rng), Assignment::from_mecs(&[0, 0, 0]));

        let mut idle = two_mec_instance(2);
        idle.p = vec![vec![0.0]; 2];
        assert!(random_feasible(&idle, &mut rng).is_empty());
        assert!(weight_greedy(&idle, 1.0).unwrap().is_empty());
    }

    #[test]
    fn random_draws_feasible() {
        let inst = desk(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            assert!(check_feasible(&inst, &random_feasible(&inst, &mut rng)).is_empty());
        }
    }

    #[test]
    fn repair_keeps_feasible_one_hot() {
        let inst = two_mec_instance(3);
        let x = Assignment::from_mecs(&[1, 0, 1]);
        let q = Marginals::one_hot(&x, 2);
        assert_eq!(repair(&inst, &q).unwrap(), x);
    }

    #[test]
    fn repair_defers_when_target_full() {
        let mut inst = two_mec_instance(2);
        inst.mecs[1].max_tasks = 1;
        inst.p = vec![vec![0.9], vec![0.5]];
        // both pairs want MEC 1; the first (higher max q) gets it
        let q = Marginals::new(2, 2, vec![0.0, 0.7, 0.0, 0.9]).unwrap();
        let x = repair(&inst, &q).unwrap();
        assert_eq!(x, Assignment::from_mecs(&[0, 1]));
    }

    #[test]
    fn repair_uniform_is_feasible_and_idempotent() {
        for seed in 0..20 {
            let inst = desk(seed);
            let x = repair(&inst, &Marginals::uniform(&inst)).unwrap();
            assert!(is_feasible(&inst, &x));
            let again = repair(&inst, &Marginals::one_hot(&x, inst.num_mecs())).unwrap();
            assert_eq!(again, x);
        }
    }

    #[test]
    fn greedy_extremes() {
        let inst = two_mec_instance(1);
        let fast = weight_greedy(&inst, 0.0).unwrap();
        assert_eq!(fast, Assignment::from_mecs(&[1]));
        assert_eq!(evaluate(&inst, &fast).unwrap().total_latency, 32.0);
        assert_eq!(weight_greedy(&inst, 1e6).unwrap(), Assignment::from_mecs(&[0]));
        assert!(weight_greedy(&inst, -1.0).is_err());
    }

    #[test]
    fn tradeoff_front_is_antichain() {
        for seed in 0..10 {
            let inst = desk(seed);
            let front = front_from_tradeoffs(&inst, &WEIGHT_GREEDY_TRADEOFFS).unwrap();
            assert!(!front.is_empty() && front.len() <= 7);
            for (a, _) in &front {
                for (b, _) in &front {
                    assert!(!dominates(a, b));
                }
            }
            assert_eq!(front_from_tradeoffs(&inst, &[1.0, 1.0]).unwrap().len(), 1);
        }
    }

    #[test]
    fn greedy_beats_random_on_average() {
        // one-sided sign test over instances at p < 0.01
        let mut wins = 0;
        let n = 20;
        for seed in 0..n {
            let inst = desk(100 + seed);
            let ell = 1.0;
            let g = evaluate(&inst, &weight_greedy(&inst, ell).unwrap()).unwrap();
            let g = scalarize_tradeoff(g.total_latency, g.total_energy, ell);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mean: f64 = (0..100)
                .map(|_| {
                    let c = evaluate(&inst, &random_feasible(&inst, &mut rng)).unwrap();
                    scalarize_tradeoff(c.total_latency, c.total_energy, ell)
                })
                .sum::<f64>()
                / 100.0;
            if g <= mean {
                wins += 1;
            }
        }
        // P(X >= 16 | n = 20, 1/2) < 0.01
        assert!(wins >= 16, "greedy won {wins}/{n}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn repair_always_feasible(seed in 0u64..1000, qs in prop::collection::vec(0.0f64..=1.0, 200)) {
            let inst = desk(seed);
            let n = inst.num_pairs() * inst.num_mecs();
            let q: Vec<f64> = (0..n).map(|i| qs[i % qs.len()]).collect();
            let q = Marginals::new(inst.num_pairs(), inst.num_mecs(), q).unwrap();
            let x = repair(&inst, &q).unwrap();
            prop_assert!(check_feasible(&inst, &x).is_empty());
        }
    }
}
