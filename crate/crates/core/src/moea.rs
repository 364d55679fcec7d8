//! NSGA-II and MOEA/D over a per-pair MEC-index genotype. Genotypes are
//! decoded through the greedy repair, so every individual is feasible.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costmodel::{evaluate, Assignment};
use crate::error::{Error, Result};
use crate::heuristics::{repair, Front, Marginals};
use crate::instance::Instance;
pub use crate::pareto::fast_nondominated_sort;
use crate::pareto::{crowding_distance, nondominated_front, ObjectivePoint, ParetoArchive};

/// Preferred MEC per required pair, canonical pair order.
pub type Genotype = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoeaParams {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene reset probability.
    pub mutation_rate: f64,
    /// MOEA/D mating and replacement neighborhood.
    pub neighborhood: usize,
    /// MOEA/D subproblem count; 0 means one per individual.
    pub num_weights: usize,
    pub seed: u64,
    /// NSGA-II: return the non-dominated set of every evaluated individual
    /// instead of the last population's first rank.
    pub archive: bool,
}

impl Default for MoeaParams {
    fn default() -> Self {
        MoeaParams {
            population: 64,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            neighborhood: 8,
            num_weights: 0,
            seed: 0,
            archive: false,
        }
    }
}

impl MoeaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig("population must be even and at least 4".into()));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.neighborhood == 0 {
            return Err(Error::InvalidConfig("neighborhood must be positive".into()));
        }
        Ok(())
    }
}

/// Genes as one-hot preferences, projected by the repair.
pub fn decode(inst: &Instance, g: &[usize]) -> Result<Assignment> {
    if g.len() != inst.num_pairs() {
        return Err(Error::Dimension(format!(
            "genotype of length {} for {} pairs",
            g.len(),
            inst.num_pairs()
        )));
    }
    repair(inst, &Marginals::one_hot(&Assignment::from_mecs(g), inst.num_mecs()))
}

#[derive(Clone, Debug)]
struct Individual {
    genes: Genotype,
    point: ObjectivePoint,
    x: Assignment,
}

/// Decodes and scores genotypes, memoizing repeated ones.
struct Evaluator<'a> {
    inst: &'a Instance,
    cache: HashMap<Genotype, (ObjectivePoint, Assignment)>,
    archive: ParetoArchive<Assignment>,
}

impl<'a> Evaluator<'a> {
    fn new(inst: &'a Instance) -> Self {
        Evaluator {
            inst,
            cache: HashMap::new(),
            archive: ParetoArchive::new(),
        }
    }

    fn score(&mut self, batch: Vec<Genotype>) -> Result<Vec<Individual>> {
        let inst = self.inst;
        let fresh: Vec<Genotype> = batch
            .iter()
            .filter(|g| !self.cache.contains_key(*g))
            .cloned()
            .collect();
        let scored: Vec<Result<(Genotype, (ObjectivePoint, Assignment))>> = fresh
            .into_par_iter()
            .map(|g| {
                let x = decode(inst, &g)?;
                let p = evaluate(inst, &x)?.point();
                Ok((g, (p, x)))
            })
            .collect();
        for r in scored {
            let (g, (p, x)) = r?;
            self.archive.insert(&inst.id, p, x.clone());
            self.cache.insert(g, (p, x));
        }
        Ok(batch
            .into_iter()
            .map(|g| {
                let (point, x) = self.cache[&g].clone();
                // write the repaired placement back into the genes
                let genes = x.slots().iter().map(|s| s.unwrap_or(0)).collect();
                Individual { genes, point, x }
            })
            .collect())
    }

    fn archive_front(&self) -> Front {
        nondominated_front(self.archive.front(&self.inst.id).to_vec())
    }
}

fn random_genotype<R: Rng>(n: usize, m: usize, rng: &mut R) -> Genotype {
    (0..n).map(|_| rng.gen_range(0..m)).collect()
}

fn vary<R: Rng>(a: &[usize], b: &[usize], m: usize, p: &MoeaParams, rng: &mut R) -> (Genotype, Genotype) {
    let (mut c1, mut c2) = (a.to_vec(), b.to_vec());
    if rng.gen::<f64>() < p.crossover_rate {
        for k in 0..c1.len() {
            if rng.gen::<bool>() {
                std::mem::swap(&mut c1[k], &mut c2[k]);
            }
        }
    }
    for c in [&mut c1, &mut c2] {
        for gene in c.iter_mut() {
            if rng.gen::<f64>() < p.mutation_rate {
                *gene = rng.gen_range(0..m);
            }
        }
    }
    (c1, c2)
}

fn rank_and_crowd(pop: &[Individual]) -> (Vec<usize>, Vec<f64>) {
    let points: Vec<ObjectivePoint> = pop.iter().map(|i| i.point).collect();
    let rank = fast_nondominated_sort(&points);
    let mut crowd = vec![0.0; pop.len()];
    let levels = rank.iter().copied().max().map_or(0, |r| r + 1);
    for r in 0..levels {
        let members: Vec<usize> = (0..pop.len()).filter(|&i| rank[i] == r).collect();
        for (k, d) in crowding_distance(&points, &members).into_iter().enumerate() {
            crowd[members[k]] = d;
        }
    }
    (rank, crowd)
}

fn trivial_front(inst: &Instance) -> Result<Front> {
    let x = decode(inst, &[])?;
    Ok(vec![(evaluate(inst, &x)?.point(), x)])
}

/// NSGA-II with binary tournaments, uniform crossover and per-gene reset
/// mutation.
pub fn nsga2(inst: &Instance, params: &MoeaParams) -> Result<Front> {
    params.validate()?;
    let n = inst.num_pairs();
    let m = inst.num_mecs();
    if n == 0 {
        return trivial_front(inst);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eval = Evaluator::new(inst);
    let init = (0..params.population).map(|_| random_genotype(n, m, &mut rng)).collect();
    let mut pop = eval.score(init)?;

    for _ in 0..params.generations {
        let (rank, crowd) = rank_and_crowd(&pop);
        let better = |a: usize, b: usize| {
            if rank[a] != rank[b] {
                rank[a] < rank[b]
            } else {
                crowd[a] > crowd[b]
            }
        };
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..pop.len());
            let b = rng.gen_range(0..pop.len());
            if better(b, a) {
                b
            } else {
                a
            }
        };
        let mut children = Vec::with_capacity(params.population);
        while children.len() < params.population {
            let pa = tournament(&mut rng);
            let pb = tournament(&mut rng);
            let (c1, c2) = vary(&pop[pa].genes, &pop[pb].genes, m, params, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        let mut merged = pop;
        merged.extend(eval.score(children)?);

        let (rank, crowd) = rank_and_crowd(&merged);
        let mut order: Vec<usize> = (0..merged.len()).collect();
        order.sort_by(|&a, &b| rank[a].cmp(&rank[b]).then(crowd[b].total_cmp(&crowd[a])));
        order.truncate(params.population);
        order.sort_unstable();
        pop = order.into_iter().map(|i| merged[i].clone()).collect();
    }

    if params.archive {
        return Ok(eval.archive_front());
    }
    let points: Vec<ObjectivePoint> = pop.iter().map(|i| i.point).collect();
    let rank = fast_nondominated_sort(&points);
    Ok(nondominated_front(
        pop.into_iter()
            .zip(rank)
            .filter(|(_, r)| *r == 0)
            .map(|(i, _)| (i.point, i.x))
            .collect(),
    ))
}

/// Evenly spaced weights `[i/(N-1), 1 - i/(N-1)]`.
pub fn uniform_weights(count: usize) -> Vec<[f64; 2]> {
    if count == 1 {
        return vec![[0.5, 0.5]];
    }
    (0..count)
        .map(|i| {
            let a = i as f64 / (count - 1) as f64;
            [a, 1.0 - a]
        })
        .collect()
}

fn tchebycheff(p: &ObjectivePoint, w: &[f64; 2], ideal: &[f64; 2], nadir: &[f64; 2]) -> f64 {
    let f = [p.t, p.e];
    (0..2)
        .map(|j| {
            let span = (nadir[j] - ideal[j]).max(1e-12);
            w[j].max(1e-6) * (f[j] - ideal[j]).abs() / span
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// MOEA/D with Tchebycheff aggregation over normalized objectives and an
/// external archive of every non-dominated evaluated point.
pub fn moead(inst: &Instance, params: &MoeaParams) -> Result<Front> {
    params.validate()?;
    let n = inst.num_pairs();
    let m = inst.num_mecs();
    if n == 0 {
        return trivial_front(inst);
    }
    let count = if params.num_weights == 0 {
        params.population
    } else {
        params.num_weights
    };
    let weights = uniform_weights(count);
    let t = params.neighborhood.min(count);
    let neighbors: Vec<Vec<usize>> = (0..count)
        .map(|i| {
            let mut idx: Vec<usize> = (0..count).collect();
            idx.sort_by(|&a, &b| {
                let da = (weights[a][0] - weights[i][0]).abs();
                let db = (weights[b][0] - weights[i][0]).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            idx.truncate(t);
            idx
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eval = Evaluator::new(inst);
    let init = (0..count).map(|_| random_genotype(n, m, &mut rng)).collect();
    let mut pop = eval.score(init)?;
    let mut ideal = [f64::INFINITY; 2];
    let mut nadir = [f64::NEG_INFINITY; 2];
    let track = |p: &ObjectivePoint, ideal: &mut [f64; 2], nadir: &mut [f64; 2]| {
        for (j, v) in [p.t, p.e].into_iter().enumerate() {
            ideal[j] = ideal[j].min(v);
            nadir[j] = nadir[j].max(v);
        }
    };
    for ind in &pop {
        track(&ind.point, &mut ideal, &mut nadir);
    }

    for _ in 0..params.generations {
        for i in 0..count {
            let hood = &neighbors[i];
            let a = hood[rng.gen_range(0..hood.len())];
            let b = hood[rng.gen_range(0..hood.len())];
            let (c, _) = vary(&pop[a].genes, &pop[b].genes, m, params, &mut rng);
            let child = eval.score(vec![c])?.remove(0);
            track(&child.point, &mut ideal, &mut nadir);
            let mut replaced = 0;
            for &k in hood {
                if replaced >= 2 {
                    break;
                }
                let w = &weights[k];
                if tchebycheff(&child.point, w, &ideal, &nadir)
                    < tchebycheff(&pop[k].point, w, &ideal, &nadir)
                {
                    pop[k] = child.clone();
                    replaced += 1;
                }
            }
        }
    }
    Ok(eval.archive_front())
}
