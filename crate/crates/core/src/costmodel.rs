//! Latency and energy accounting for a placement, with the cache decision
//! derived from the placement itself (a space is cached on a MEC exactly when
//! some user's computation for it runs there).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Pair};
use crate::pareto::HvConfig;
use crate::preference::PreferenceWeight;

/// Mega-cycles times (GHz)^2 expressed in cycles·Hz^2.
pub const CYCLE_ENERGY_SCALE: f64 = 1e24;

/// One MEC choice per required pair, in the instance's canonical pair order.
/// `None` leaves a pair unassigned (structurally allowed, infeasible).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    slots: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(num_pairs: usize) -> Self {
        Assignment {
            slots: vec![None; num_pairs],
        }
    }

    pub fn from_slots(slots: Vec<Option<usize>>) -> Self {
        Assignment { slots }
    }

    pub fn from_mecs(mecs: &[usize]) -> Self {
        Assignment {
            slots: mecs.iter().map(|&m| Some(m)).collect(),
        }
    }

    /// Every pair on its user's local MEC.
    pub fn all_local(inst: &Instance) -> Self {
        Assignment {
            slots: inst
                .pair_iter()
                .map(|p| Some(inst.users[p.user].local_mec))
                .collect(),
        }
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, pair: usize) -> Option<usize> {
        self.slots[pair]
    }

    pub fn set(&mut self, pair: usize, mec: Option<usize>) {
        self.slots[pair] = mec;
    }

    pub fn num_assigned(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// Set triples `[u, v, m]`, sorted.
    pub fn triples(&self, inst: &Instance) -> Vec<[usize; 3]> {
        inst.pair_iter()
            .zip(&self.slots)
            .filter_map(|(p, s)| s.map(|m| [p.user, p.space, m]))
            .collect()
    }

    pub fn from_triples(inst: &Instance, triples: &[[usize; 3]]) -> Result<Self> {
        let pairs = inst.pairs();
        let mut slots = vec![None; pairs.len()];
        for &[u, v, m] in triples {
            let idx = pairs
                .iter()
                .position(|p| p.user == u && p.space == v)
                .ok_or_else(|| Error::Dimension(format!("triple ({u},{v},{m}) is not admissible")))?;
            if m >= inst.num_mecs() {
                return Err(Error::Dimension(format!("mec index {m} out of range")));
            }
            if slots[idx].replace(m).is_some() {
                return Err(Error::Dimension(format!("pair ({u},{v}) placed twice")));
            }
        }
        Ok(Assignment { slots })
    }

    pub fn check_dims(&self, inst: &Instance) -> Result<()> {
        let n = inst.num_pairs();
        if self.slots.len() != n {
            return Err(Error::Dimension(format!(
                "assignment covers {} pairs, instance has {n}",
                self.slots.len()
            )));
        }
        if let Some(m) = self.slots.iter().flatten().find(|&&m| m >= inst.num_mecs()) {
            return Err(Error::Dimension(format!("mec index {m} out of range")));
        }
        Ok(())
    }
}

/// Cache decision `y[v][m]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheVector {
    pub y: Vec<Vec<bool>>,
}

impl CacheVector {
    pub fn zeros(num_spaces: usize, num_mecs: usize) -> Self {
        CacheVector {
            y: vec![vec![false; num_mecs]; num_spaces],
        }
    }
}

/// Indicator of any placement of space `v` on MEC `m`.
pub fn cache_from_assignment(inst: &Instance, x: &Assignment) -> CacheVector {
    let mut cache = CacheVector::zeros(inst.num_spaces(), inst.num_mecs());
    for (pair, slot) in inst.pair_iter().zip(x.slots()) {
        if let Some(m) = *slot {
            cache.y[pair.space][m] = true;
        }
    }
    cache
}

/// Whether `y` is coupled to `x` the way the cache constraints require:
/// `y >= x` pointwise and `y <= sum_u x`.
pub fn cache_consistent(inst: &Instance, x: &Assignment, y: &CacheVector) -> bool {
    let mut count = vec![vec![0usize; inst.num_mecs()]; inst.num_spaces()];
    for (pair, slot) in inst.pair_iter().zip(x.slots()) {
        if let Some(m) = *slot {
            if !y.y[pair.space][m] {
                return false;
            }
            count[pair.space][m] += 1;
        }
    }
    y.y.iter()
        .zip(&count)
        .all(|(yr, cr)| yr.iter().zip(cr).all(|(&yy, &c)| !yy || c > 0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub tau_sync: f64,
    pub tau_compute: f64,
    pub tau_cross: f64,
    /// Reported only; independent of the placement.
    pub tau_edge: f64,
    pub eps_maint: f64,
    pub eps_sync: f64,
    pub eps_compute: f64,
    pub eps_cross: f64,
    /// Reported only; independent of the placement.
    pub eps_edge: f64,
    pub total_latency: f64,
    pub total_energy: f64,
}

impl CostBreakdown {
    fn finish(mut self) -> Self {
        self.total_latency = self.tau_sync + self.tau_compute + self.tau_cross;
        self.total_energy = self.eps_maint + self.eps_sync + self.eps_compute + self.eps_cross;
        self
    }

    pub fn point(&self) -> crate::pareto::ObjectivePoint {
        crate::pareto::ObjectivePoint::new(self.total_latency, self.total_energy)
    }
}

/// Compute and cross-MEC cost of running `pair` on `m`: `(latency, energy)`.
#[inline]
pub fn pair_cost(inst: &Instance, pair: &Pair, m: usize) -> (f64, f64) {
    let s = &inst.spaces[pair.space];
    let f = inst.mecs[m].frequency;
    let l = &inst.links;
    let u = pair.user;
    let lat = pair.prob * s.workload / f
        + pair.prob * (l.sensor_latency[u][m] + l.frame_latency_coeff[m][u] * s.frame_size);
    let en = inst.constants.energy_coeff * CYCLE_ENERGY_SCALE * pair.prob * s.workload * f * f
        + pair.prob * (l.sensor_energy[u][m] + l.frame_energy_coeff[m][u] * s.frame_size);
    (lat, en)
}

fn edge_terms(inst: &Instance) -> (f64, f64) {
    let mut tau = 0.0;
    let mut eps = 0.0;
    for (u, row) in inst.p.iter().enumerate() {
        let user = &inst.users[u];
        for (v, &p) in row.iter().enumerate() {
            let d = inst.spaces[v].frame_size;
            tau += p * user.edge_latency_coeff * d;
            eps += p * user.edge_energy_coeff * d;
        }
    }
    (tau, eps)
}

/// All cost terms of a (possibly infeasible) placement.
pub fn evaluate(inst: &Instance, x: &Assignment) -> Result<CostBreakdown> {
    x.check_dims(inst)?;
    let nm = inst.num_mecs();
    let mut cb = CostBreakdown::default();
    let mut open = vec![vec![false; nm]; inst.num_spaces()];
    let cscale = inst.constants.energy_coeff * CYCLE_ENERGY_SCALE;
    let l = &inst.links;
    for (pair, slot) in inst.pair_iter().zip(x.slots()) {
        let Some(m) = *slot else { continue };
        let s = &inst.spaces[pair.space];
        let f = inst.mecs[m].frequency;
        let u = pair.user;
        open[pair.space][m] = true;
        cb.tau_compute += pair.prob * s.workload / f;
        cb.eps_compute += cscale * pair.prob * s.workload * f * f;
        cb.tau_cross +=
            pair.prob * (l.sensor_latency[u][m] + l.frame_latency_coeff[m][u] * s.frame_size);
        cb.eps_cross +=
            pair.prob * (l.sensor_energy[u][m] + l.frame_energy_coeff[m][u] * s.frame_size);
    }
    for (v, row) in open.iter().enumerate() {
        let sites: Vec<usize> = (0..nm).filter(|&m| row[m]).collect();
        cb.eps_maint += sites.len() as f64 * inst.spaces[v].maint_energy;
        for &m in &sites {
            for &n in &sites {
                cb.tau_sync += l.sync_latency[m][n];
                cb.eps_sync += l.sync_energy[m][n];
            }
        }
    }
    (cb.tau_edge, cb.eps_edge) = edge_terms(inst);
    Ok(cb.finish())
}

/// Literal triple-sum evaluation with an explicit cache vector `y`, as the
/// unreduced problem states it. Used to cross-check [`evaluate`].
pub fn evaluate_with_cache(inst: &Instance, x: &Assignment, y: &CacheVector) -> Result<CostBreakdown> {
    x.check_dims(inst)?;
    let (nu, nv, nm) = (inst.num_users(), inst.num_spaces(), inst.num_mecs());
    if y.y.len() != nv || y.y.iter().any(|r| r.len() != nm) {
        return Err(Error::Dimension("cache vector shape".into()));
    }
    let mut dense = vec![vec![vec![0.0f64; nm]; nv]; nu];
    for (pair, slot) in inst.pair_iter().zip(x.slots()) {
        if let Some(m) = *slot {
            dense[pair.user][pair.space][m] = 1.0;
        }
    }
    let yv = |v: usize, m: usize| if y.y[v][m] { 1.0 } else { 0.0 };
    let l = &inst.links;
    let xi = inst.constants.energy_coeff * CYCLE_ENERGY_SCALE;
    let mut cb = CostBreakdown::default();
    for v in 0..nv {
        for m in 0..nm {
            cb.eps_maint += yv(v, m) * inst.spaces[v].maint_energy;
            for n in 0..nm {
                cb.tau_sync += l.sync_latency[m][n] * yv(v, m) * yv(v, n);
                cb.eps_sync += l.sync_energy[m][n] * yv(v, m) * yv(v, n);
            }
        }
    }
    for m in 0..nm {
        let f = inst.mecs[m].frequency;
        for u in 0..nu {
            for v in 0..nv {
                let px = inst.p[u][v] * dense[u][v][m];
                let s = &inst.spaces[v];
                cb.tau_compute += px * s.workload / f;
                cb.eps_compute += xi * px * s.workload * f * f;
                cb.tau_cross += px * (l.sensor_latency[u][m] + l.frame_latency_coeff[m][u] * s.frame_size);
                cb.eps_cross += px * (l.sensor_energy[u][m] + l.frame_energy_coeff[m][u] * s.frame_size);
            }
        }
    }
    (cb.tau_edge, cb.eps_edge) = edge_terms(inst);
    Ok(cb.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// A required pair has no computing location.
    Placement,
    /// Cached packages exceed a MEC's capacity.
    Cache,
    /// More tasks than a MEC can host.
    Tasks,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Pair index for placement violations, MEC index otherwise.
    pub index: usize,
    pub magnitude: f64,
}

pub fn check_feasible(inst: &Instance, x: &Assignment) -> Vec<Violation> {
    let nm = inst.num_mecs();
    let mut out = Vec::new();
    let mut tasks = vec![0u32; nm];
    let cache = cache_from_assignment(inst, x);
    for (i, slot) in x.slots().iter().enumerate() {
        match slot {
            Some(m) => tasks[*m] += 1,
            None => out.push(Violation {
                kind: ViolationKind::Placement,
                index: i,
                magnitude: 1.0,
            }),
        }
    }
    for m in 0..nm {
        let used: f64 = (0..inst.num_spaces())
            .filter(|&v| cache.y[v][m])
            .map(|v| inst.spaces[v].cache_size)
            .sum();
        if used > inst.mecs[m].cache_capacity {
            out.push(Violation {
                kind: ViolationKind::Cache,
                index: m,
                magnitude: used - inst.mecs[m].cache_capacity,
            });
        }
        if tasks[m] > inst.mecs[m].max_tasks {
            out.push(Violation {
                kind: ViolationKind::Tasks,
                index: m,
                magnitude: (tasks[m] - inst.mecs[m].max_tasks) as f64,
            });
        }
    }
    out
}

pub fn is_feasible(inst: &Instance, x: &Assignment) -> bool {
    x.check_dims(inst).is_ok() && check_feasible(inst, x).is_empty()
}

/// Linear objective `a·T + b·E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub latency: f64,
    pub energy: f64,
}

impl ObjectiveWeights {
    pub const LATENCY: ObjectiveWeights = ObjectiveWeights {
        latency: 1.0,
        energy: 0.0,
    };
    pub const ENERGY: ObjectiveWeights = ObjectiveWeights {
        latency: 0.0,
        energy: 1.0,
    };

    pub fn tradeoff(ell: f64) -> Self {
        ObjectiveWeights {
            latency: 1.0,
            energy: ell,
        }
    }

    pub fn normalized(w: PreferenceWeight, hv: &HvConfig) -> Self {
        ObjectiveWeights {
            latency: w.latency() / hv.t_ref,
            energy: w.energy() / hv.e_ref,
        }
    }

    pub fn value(&self, cb: &CostBreakdown) -> f64 {
        self.latency * cb.total_latency + self.energy * cb.total_energy
    }
}

/// `w1·T/T_ref + w2·E/E_ref`.
pub fn scalarize(t: f64, e: f64, w: PreferenceWeight, hv: &HvConfig) -> f64 {
    w.latency() * t / hv.t_ref + w.energy() * e / hv.e_ref
}

/// `T + ℓ·E`.
pub fn scalarize_tradeoff(t: f64, e: f64, ell: f64) -> f64 {
    t + ell * e
}

/// Share of placed pairs that run on their user's local MEC.
pub fn local_rate(inst: &Instance, x: &Assignment) -> Result<f64> {
    let mut local = 0usize;
    let mut total = 0usize;
    for (pair, slot) in inst.pair_iter().zip(x.slots()) {
        if let Some(m) = *slot {
            total += 1;
            if m == inst.users[pair.user].local_mec {
                local += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::UndefinedRate);
    }
    Ok(local as f64 / total as f64)
}

/// Mean number of MECs hosting each space.
pub fn avg_placements(inst: &Instance, x: &Assignment) -> f64 {
    let nv = inst.num_spaces();
    if nv == 0 {
        return 0.0;
    }
    let cache = cache_from_assignment(inst, x);
    let total: usize = cache.y.iter().map(|r| r.iter().filter(|&&b| b).count()).sum();
    total as f64 / nv as f64
}

/// Running task, cache and replica state while a placement is built one pair
/// at a time. Keeps exact objective increments available.
#[derive(Clone, Debug)]
pub struct PartialPlacement<'a> {
    inst: &'a Instance,
    tasks: Vec<u32>,
    cache_used: Vec<f64>,
    /// Users of space `v` on MEC `m`.
    hosted: Vec<Vec<u32>>,
}

impl<'a> PartialPlacement<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        PartialPlacement {
            inst,
            tasks: vec![0; inst.num_mecs()],
            cache_used: vec![0.0; inst.num_mecs()],
            hosted: vec![vec![0; inst.num_mecs()]; inst.num_spaces()],
        }
    }

    pub fn is_open(&self, space: usize, m: usize) -> bool {
        self.hosted[space][m] > 0
    }

    pub fn can_place(&self, space: usize, m: usize) -> bool {
        let mec = &self.inst.mecs[m];
        if self.tasks[m] >= mec.max_tasks {
            return false;
        }
        self.is_open(space, m)
            || self.cache_used[m] + self.inst.spaces[space].cache_size <= mec.cache_capacity
    }

    pub fn place(&mut self, space: usize, m: usize) {
        if self.hosted[space][m] == 0 {
            self.cache_used[m] += self.inst.spaces[space].cache_size;
        }
        self.hosted[space][m] += 1;
        self.tasks[m] += 1;
    }

    pub fn remove(&mut self, space: usize, m: usize) {
        debug_assert!(self.hosted[space][m] > 0);
        self.hosted[space][m] -= 1;
        self.tasks[m] -= 1;
        if self.hosted[space][m] == 0 {
            self.cache_used[m] -= self.inst.spaces[space].cache_size;
            if self.cache_used[m].abs() < 1e-9 {
                self.cache_used[m] = 0.0;
            }
        }
    }

    /// Exact increase of `w.latency·T + w.energy·E` from placing `pair` on
    /// `m`, including maintenance and synchronization of a newly opened
    /// replica.
    pub fn delta(&self, pair: &Pair, m: usize, w: ObjectiveWeights) -> f64 {
        let (lat, en) = pair_cost(self.inst, pair, m);
        let mut d = w.latency * lat + w.energy * en;
        if !self.is_open(pair.space, m) {
            d += w.energy * self.inst.spaces[pair.space].maint_energy;
            let l = &self.inst.links;
            for (n, &h) in self.hosted[pair.space].iter().enumerate() {
                if h > 0 && n != m {
                    d += w.latency * (l.sync_latency[m][n] + l.sync_latency[n][m])
                        + w.energy * (l.sync_energy[m][n] + l.sync_energy[n][m]);
                }
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_mec_instance;

    #[test]
    fn local_single_user() {
        let inst = two_mec_instance(1);
        let cb = evaluate(&inst, &Assignment::from_mecs(&[0])).unwrap();
        assert!((cb.tau_compute - 50.0).abs() < 1e-12);
        assert_eq!(cb.tau_sync, 0.0);
        assert_eq!(cb.tau_cross, 0.0);
        assert!((cb.total_latency - 50.0).abs() < 1e-12);
        assert_eq!(cb.eps_maint, 10.0);
        assert!((cb.eps_compute - 40.0).abs() < 1e-9);
        assert!((cb.total_energy - 50.0).abs() < 1e-9);
    }

    #[test]
    fn remote_single_user() {
        let inst = two_mec_instance(1);
        let cb = evaluate(&inst, &Assignment::from_mecs(&[1])).unwrap();
        assert!((cb.tau_compute - 25.0).abs() < 1e-12);
        assert!((cb.tau_cross - 7.0).abs() < 1e-12);
        assert!((cb.total_latency - 32.0).abs() < 1e-12);
    }

    #[test]
    fn sync_counts_both_orders() {
        let inst = two_mec_instance(2);
        let cb = evaluate(&inst, &Assignment::from_mecs(&[0, 1])).unwrap();
        assert!((cb.tau_sync - 2.0).abs() < 1e-12);
        assert!((cb.eps_sync - 3.0).abs() < 1e-12);
        assert_eq!(cb.eps_maint, 20.0);
    }

    #[test]
    fn cache_indicator() {
        let inst = two_mec_instance(2);
        let empty = cache_from_assignment(&inst, &Assignment::empty(2));
        assert!(empty.y.iter().flatten().all(|b| !b));
        let both = cache_from_assignment(&inst, &Assignment::from_mecs(&[1, 1]));
        assert_eq!(both.y, vec![vec![false, true]]);
    }

    #[test]
    fn feasibility_violations() {
        let mut inst = two_mec_instance(3);
        assert!(check_feasible(&inst, &Assignment::all_local(&inst)).is_empty());
        let unassigned = Assignment::from_slots(vec![Some(0), None, Some(0)]);
        let v = check_feasible(&inst, &unassigned);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Placement);

        inst.mecs[0].max_tasks = 2;
        let v = check_feasible(&inst, &Assignment::from_mecs(&[0, 0, 0]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Tasks);
        assert_eq!(v[0].magnitude, 1.0);

        inst.mecs[1].cache_capacity = 50.0;
        let v = check_feasible(&inst, &Assignment::from_mecs(&[1, 0, 0]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Cache);
        assert_eq!(v[0].magnitude, 50.0);
    }

    #[test]
    fn scalarizations() {
        let hv = HvConfig::new(50.0, 100.0);
        assert_eq!(scalarize(25.0, 7.0, PreferenceWeight::LATENCY, &hv), 0.5);
        assert_eq!(scalarize(3.0, 100.0, PreferenceWeight::ENERGY, &hv), 1.0);
        assert_eq!(scalarize(50.0, 100.0, PreferenceWeight::new(0.5), &hv), 1.0);
        assert_eq!(scalarize_tradeoff(32.0, 50.0, 0.0), 32.0);
        assert_eq!(scalarize_tradeoff(32.0, 50.0, 1.0), 82.0);
        assert_eq!(scalarize_tradeoff(0.0, 5.0, 10.0), 50.0);
    }

    #[test]
    fn locality_metrics() {
        let inst = two_mec_instance(4);
        // users 0,2 are local to MEC 0; 1,3 to MEC 1
        assert_eq!(local_rate(&inst, &Assignment::all_local(&inst)).unwrap(), 1.0);
        assert_eq!(local_rate(&inst, &Assignment::from_mecs(&[1, 0, 1, 0])).unwrap(), 0.0);
        assert_eq!(local_rate(&inst, &Assignment::from_mecs(&[0, 1, 0, 0])).unwrap(), 0.75);
        assert!(matches!(
            local_rate(&inst, &Assignment::empty(4)),
            Err(Error::UndefinedRate)
        ));
        assert_eq!(avg_placements(&inst, &Assignment::empty(4)), 0.0);
        assert_eq!(avg_placements(&inst, &Assignment::from_mecs(&[0, 1, 0, 0])), 2.0);
    }

    #[test]
    fn delta_matches_full_reevaluation() {
        let inst = two_mec_instance(3);
        let pairs = inst.pairs();
        let w = ObjectiveWeights { latency: 1.0, energy: 0.3 };
        let mut partial = PartialPlacement::new(&inst);
        let mut x = Assignment::empty(3);
        let mut acc = 0.0;
        for (i, m) in [1usize, 0, 1].into_iter().enumerate() {
            acc += partial.delta(&pairs[i], m, w);
            partial.place(pairs[i].space, m);
            x.set(i, Some(m));
        }
        let full = w.value(&evaluate(&inst, &x).unwrap());
        assert!((acc - full).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let inst = two_mec_instance(2);
        assert!(matches!(
            evaluate(&inst, &Assignment::from_mecs(&[0])),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            evaluate(&inst, &Assignment::from_mecs(&[0, 7])),
            Err(Error::Dimension(_))
        ));
    }
}
