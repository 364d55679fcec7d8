//! Exact solvers for small instances: depth-first branch-and-bound on a
//! linear objective, full Pareto-front enumeration, and label generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{evaluate, is_feasible, pair_cost, Assignment, CostBreakdown, ObjectiveWeights, PartialPlacement};
use crate::error::{Error, Result};
use crate::heuristics::{greedy_weighted, Front};
use crate::instance::{Instance, Pair};
use crate::pareto::nondominated_front;

/// Scalar objective minimized by [`solve_exact`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleObjective {
    Latency,
    Energy,
    /// `a·T + b·E` with the given coefficients.
    Weighted(ObjectiveWeights),
    /// `T + ℓ·E`.
    Tradeoff(f64),
}

impl OracleObjective {
    pub fn weights(&self) -> ObjectiveWeights {
        match *self {
            OracleObjective::Latency => ObjectiveWeights::LATENCY,
            OracleObjective::Energy => ObjectiveWeights::ENERGY,
            OracleObjective::Weighted(w) => w,
            OracleObjective::Tradeoff(ell) => ObjectiveWeights::tradeoff(ell),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_search_nodes: u64,
    pub objective: OracleObjective,
}

impl OracleConfig {
    pub fn new(objective: OracleObjective) -> Self {
        OracleConfig {
            max_search_nodes: 50_000_000,
            objective,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_search_nodes == 0 {
            return Err(Error::InvalidConfig("max_search_nodes must be positive".into()));
        }
        if let OracleObjective::Weighted(w) = self.objective {
            if !(w.latency >= 0.0 && w.energy >= 0.0) {
                return Err(Error::InvalidConfig("objective weights must be >= 0".into()));
            }
        }
        if let OracleObjective::Tradeoff(ell) = self.objective {
            if !(ell >= 0.0) {
                return Err(Error::InvalidConfig("trade-off factor must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub x: Assignment,
    pub value: f64,
    pub costs: CostBreakdown,
    /// False when the node budget ran out before the search finished.
    pub certified: bool,
    pub nodes: u64,
}

struct Search<'a> {
    inst: &'a Instance,
    pairs: Vec<Pair>,
    order: Vec<usize>,
    w: ObjectiveWeights,
    /// `suffix_bound[k]`: sum over `order[k..]` of the cheapest per-pair cost.
    suffix_bound: Vec<f64>,
    /// Pairs of each space still unplaced after depth `k`.
    remaining_per_space: Vec<Vec<u32>>,
    budget: u64,
    nodes: u64,
    best: Option<(f64, Assignment)>,
}

impl Search<'_> {
    fn bound(&self, depth: usize, partial: f64, state: &PartialPlacement) -> f64 {
        let mut b = partial + self.suffix_bound[depth];
        // every space with pending demand and no replica must open one
        for (v, &left) in self.remaining_per_space[depth].iter().enumerate() {
            if left > 0 && !(0..self.inst.num_mecs()).any(|m| state.is_open(v, m)) {
                b += self.w.energy * self.inst.spaces[v].maint_energy;
            }
        }
        b
    }

    fn offer(&mut self, x: &Assignment) {
        let cb = evaluate(self.inst, x).expect("search builds well-formed placements");
        let value = self.w.value(&cb);
        let better = match &self.best {
            None => true,
            Some((bv, bx)) => value < *bv || (value == *bv && x.slots() < bx.slots()),
        };
        if better {
            self.best = Some((value, x.clone()));
        }
    }

    fn dfs(&mut self, depth: usize, partial: f64, state: &mut PartialPlacement, x: &mut Assignment) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if depth == self.order.len() {
            self.offer(x);
            return true;
        }
        if let Some((bv, _)) = &self.best {
            if self.bound(depth, partial, state) > bv * (1.0 + 1e-12) + 1e-12 {
                return true;
            }
        }
        let i = self.order[depth];
        let pair = self.pairs[i];
        let mut options: Vec<(f64, usize)> = (0..self.inst.num_mecs())
            .filter(|&m| state.can_place(pair.space, m))
            .map(|m| (state.delta(&pair, m, self.w), m))
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (d, m) in options {
            state.place(pair.space, m);
            x.set(i, Some(m));
            let done = self.dfs(depth + 1, partial + d, state, x);
            x.set(i, None);
            state.remove(pair.space, m);
            if !done {
                return false;
            }
        }
        true
    }
}

/// Minimizes the configured objective over feasible placements.
///
/// Ties between equal objective values go to the lexicographically smallest
/// MEC vector in canonical pair order. When the node budget runs out the
/// best placement found so far is returned with `certified = false`.
pub fn solve_exact(inst: &Instance, cfg: &OracleConfig) -> Result<ExactSolution> {
    cfg.validate()?;
    let w = cfg.objective.weights();
    let pairs = inst.pairs();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[b].prob.total_cmp(&pairs[a].prob));

    let cheapest: Vec<f64> = order
        .iter()
        .map(|&i| {
            (0..inst.num_mecs())
                .map(|m| {
                    let (l, e) = pair_cost(inst, &pairs[i], m);
                    w.latency * l + w.energy * e
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut suffix_bound = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix_bound[k] = suffix_bound[k + 1] + cheapest[k];
    }
    let mut remaining_per_space = vec![vec![0u32; inst.num_spaces()]; order.len() + 1];
    for k in (0..order.len()).rev() {
        remaining_per_space[k] = remaining_per_space[k + 1].clone();
        remaining_per_space[k][pairs[order[k]].space] += 1;
    }

    let mut search = Search {
        inst,
        pairs,
        order,
        w,
        suffix_bound,
        remaining_per_space,
        budget: cfg.max_search_nodes,
        nodes: 0,
        best: None,
    };
    if let Ok(seed) = greedy_weighted(inst, w) {
        if is_feasible(inst, &seed) {
            search.offer(&seed);
        }
    }
    let mut state = PartialPlacement::new(inst);
    let mut x = Assignment::empty(search.pairs.len());
    let certified = search.dfs(0, 0.0, &mut state, &mut x);
    let nodes = search.nodes;
    let Some((value, x)) = search.best else {
        return Err(if certified {
            Error::InfeasibleInstance("no feasible placement exists".into())
        } else {
            Error::BudgetExceeded {
                budget: cfg.max_search_nodes,
            }
        });
    };
    let costs = evaluate(inst, &x)?;
    Ok(ExactSolution {
        x,
        value,
        costs,
        certified,
        nodes,
    })
}

/// Calls `visit` on every feasible placement, in lexicographic order of the
/// MEC vector. Fails if `|M|^pairs` exceeds `budget`.
pub fn for_each_feasible(inst: &Instance, budget: u64, mut visit: impl FnMut(&Assignment)) -> Result<()> {
    let n = inst.num_pairs();
    let space = (inst.num_mecs() as f64).powi(n as i32);
    if space > budget as f64 {
        return Err(Error::BudgetExceeded { budget });
    }
    let pairs = inst.pairs();
    fn rec(
        inst: &Instance,
        pairs: &[Pair],
        k: usize,
        state: &mut PartialPlacement,
        x: &mut Assignment,
        visit: &mut dyn FnMut(&Assignment),
    ) {
        if k == pairs.len() {
            visit(x);
            return;
        }
        for m in 0..inst.num_mecs() {
            if state.can_place(pairs[k].space, m) {
                state.place(pairs[k].space, m);
                x.set(k, Some(m));
                rec(inst, pairs, k + 1, state, x, visit);
                x.set(k, None);
                state.remove(pairs[k].space, m);
            }
        }
    }
    let mut state = PartialPlacement::new(inst);
    let mut x = Assignment::empty(n);
    rec(inst, &pairs, 0, &mut state, &mut x, &mut visit);
    Ok(())
}

/// The exact Pareto front by enumerating every feasible placement.
pub fn enumerate_pareto_exact(inst: &Instance, budget: u64) -> Result<Front> {
    let mut entries = Vec::new();
    let mut err = None;
    for_each_feasible(inst, budget, |x| match evaluate(inst, x) {
        Ok(cb) => entries.push((cb.point(), x.clone())),
        Err(e) => err = Some(e),
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(nondominated_front(entries))
}

/// One oracle label: objective 1 is latency, objective 2 is energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub instance_id: String,
    pub objective: u8,
    pub triples: Vec<[usize; 3]>,
    pub value: f64,
}

/// Latency- and energy-optimal labels for every instance. Instances whose
/// solve fails or is not certified are skipped and counted.
pub fn label_dataset(instances: &[Instance], max_search_nodes: u64) -> (Vec<LabeledExample>, usize) {
    let per: Vec<Option<[LabeledExample; 2]>> = instances
        .par_iter()
        .map(|inst| {
            let mut out = Vec::with_capacity(2);
            for (tag, obj) in [(1u8, OracleObjective::Latency), (2, OracleObjective::Energy)] {
                let cfg = OracleConfig {
                    max_search_nodes,
                    objective: obj,
                };
                match solve_exact(inst, &cfg) {
                    Ok(sol) if sol.certified => out.push(LabeledExample {
                        instance_id: inst.id.clone(),
                        objective: tag,
                        triples: sol.x.triples(inst),
                        value: sol.value,
                    }),
                    Ok(_) => {
                        log::warn!("{}: search budget exhausted, skipping", inst.id);
                        return None;
                    }
                    Err(e) => {
                        log::warn!("{}: {e}, skipping", inst.id);
                        return None;
                    }
                }
            }
            let [a, b]: [LabeledExample; 2] = out.try_into().ok()?;
            Some([a, b])
        })
        .collect();
    let skipped = per.iter().filter(|p| p.is_none()).count();
    (per.into_iter().flatten().flatten().collect(), skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::check_feasible;
    use crate::fixtures::two_mec_instance;
    use crate::heuristics::random_feasible;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::pareto::dominates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GeneratorConfig {
            num_users: 1 + (seed % 4) as usize,
            num_spaces: 1 + (seed % 2) as usize,
            num_mecs: 1 + (seed % 3) as usize,
            active_spaces: (1, 1 + (seed % 2) as usize),
            ..GeneratorConfig::desk()
        };
        generate_instance(&cfg, &format!("t{seed}"), &mut rng).unwrap()
    }

    /// Independent brute force: every MEC vector, feasibility by the checker.
    fn brute_min(inst: &Instance, w: ObjectiveWeights) -> Option<(f64, Assignment)> {
        let n = inst.num_pairs();
        let m = inst.num_mecs();
        let mut best: Option<(f64, Assignment)> = None;
        let mut digits = vec![0usize; n];
        loop {
            let x = Assignment::from_mecs(&digits);
            if check_feasible(inst, &x).is_empty() {
                let v = w.value(&evaluate(inst, &x).unwrap());
                if best.as_ref().map_or(true, |(b, _)| v < *b) {
                    best = Some((v, x));
                }
            }
            let mut k = 0;
            while k < n {
                digits[k] += 1;
                if digits[k] < m {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..60 {
            let inst = tiny(seed);
            for obj in [OracleObjective::Latency, OracleObjective::Energy, OracleObjective::Tradeoff(2.0)] {
                let sol = solve_exact(&inst, &OracleConfig::new(obj)).unwrap();
                let (bv, _) = brute_min(&inst, obj.weights()).unwrap();
                assert!(sol.certified);
                assert_eq!(sol.value, bv, "seed {seed} {obj:?}");
                assert!(check_feasible(&inst, &sol.x).is_empty());
            }
        }
    }

    #[test]
    fn singleton_and_idle() {
        let mut inst = two_mec_instance(1);
        let sol = solve_exact(&inst, &OracleConfig::new(OracleObjective::Latency)).unwrap();
        assert_eq!(sol.value, 32.0);
        inst.p = vec![vec![0.0]];
        let sol = solve_exact(&inst, &OracleConfig::new(OracleObjective::Energy)).unwrap();
        assert!(sol.x.is_empty());
        assert_eq!((sol.costs.total_latency, sol.costs.total_energy), (0.0, 0.0));
    }

    #[test]
    fn budget_flags_uncertified() {
        let inst = tiny(11);
        let cfg = OracleConfig {
            max_search_nodes: 1,
            objective: OracleObjective::Latency,
        };
        let sol = solve_exact(&inst, &cfg).unwrap();
        assert!(!sol.certified);
        assert!(check_feasible(&inst, &sol.x).is_empty());
    }

    #[test]
    fn never_beaten_by_random() {
        let inst = tiny(23);
        let sol = solve_exact(&inst, &OracleConfig::new(OracleObjective::Latency)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let x = random_feasible(&inst, &mut rng);
            assert!(evaluate(&inst, &x).unwrap().total_latency >= sol.value);
        }
    }

    #[test]
    fn pareto_front_definition() {
        for seed in 0..20 {
            let inst = tiny(seed);
            let front = enumerate_pareto_exact(&inst, 1 << 20).unwrap();
            for (a, _) in &front {
                for (b, _) in &front {
                    assert!(!dominates(a, b));
                }
            }
            for_each_feasible(&inst, 1 << 20, |x| {
                let p = evaluate(&inst, x).unwrap().point();
                assert!(front.iter().any(|(q, _)| *q == p || dominates(q, &p)));
            })
            .unwrap();
            let lat = solve_exact(&inst, &OracleConfig::new(OracleObjective::Latency)).unwrap();
            assert_eq!(front[0].0.t, lat.value);
        }
        assert!(matches!(
            enumerate_pareto_exact(&tiny(3), 1),
            Err(Error::BudgetExceeded { .. }) | Ok(_)
        ));
    }

    #[test]
    fn labels_two_per_instance() {
        let insts: Vec<Instance> = (0..10).map(tiny).collect();
        let (labels, skipped) = label_dataset(&insts, 1_000_000);
        assert_eq!(skipped, 0);
        assert_eq!(labels.len(), 20);
        for l in &labels {
            let inst = insts.iter().find(|i| i.id == l.instance_id).unwrap();
            let x = Assignment::from_triples(inst, &l.triples).unwrap();
            assert!(check_feasible(inst, &x).is_empty());
        }
    }
}
