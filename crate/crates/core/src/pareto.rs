//! Dominance, non-dominated sorting, the per-instance Pareto archive and the
//! normalized two-objective hypervolume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Objective vector `(T, E)`: total latency in ms and total energy in J.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub t: f64,
    pub e: f64,
}

impl ObjectivePoint {
    pub fn new(t: f64, e: f64) -> Self {
        ObjectivePoint { t, e }
    }
}

/// Strict Pareto dominance for minimization.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    a.t <= b.t && a.e <= b.e && (a.t < b.t || a.e < b.e)
}

/// Indices of points not dominated by any other point. Exact duplicates of a
/// non-dominated point are all kept.
pub fn nondominated_indices(points: &[ObjectivePoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect()
}

/// Non-dominated subset with exact-duplicate points removed, sorted by `T`.
pub fn nondominated_unique(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    let mut front: Vec<ObjectivePoint> = nondominated_indices(points)
        .into_iter()
        .map(|i| points[i])
        .collect();
    front.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.e.total_cmp(&b.e)));
    front.dedup();
    front
}

/// Non-dominated entries with duplicate points collapsed to their first
/// occurrence, sorted by `T`.
pub fn nondominated_front<S>(entries: Vec<(ObjectivePoint, S)>) -> Vec<(ObjectivePoint, S)> {
    let points: Vec<ObjectivePoint> = entries.iter().map(|(p, _)| *p).collect();
    let keep = nondominated_indices(&points);
    let mut out: Vec<(ObjectivePoint, S)> = Vec::with_capacity(keep.len());
    let mut slots: Vec<Option<(ObjectivePoint, S)>> = entries.into_iter().map(Some).collect();
    for i in keep {
        if !out.iter().any(|(q, _)| *q == points[i]) {
            out.push(slots[i].take().expect("index visited once"));
        }
    }
    out.sort_by(|a, b| a.0.t.total_cmp(&b.0.t).then(a.0.e.total_cmp(&b.0.e)));
    out
}

/// Rank of every point: 0 for the non-dominated set, `k` for the set that is
/// non-dominated once ranks below `k` are removed.
pub fn fast_nondominated_sort(points: &[ObjectivePoint]) -> Vec<usize> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&points[i], &points[j]) {
                dominated_by[i].push(j);
            } else if i != j && dominates(&points[j], &points[i]) {
                counts[i] += 1;
            }
        }
    }
    let mut rank = vec![0usize; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominated_by[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        level += 1;
        current = next;
    }
    rank
}

/// Crowding distance of each member of `front` (indices into `points`).
/// Boundary members get infinity.
pub fn crowding_distance(points: &[ObjectivePoint], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for key in [|p: &ObjectivePoint| p.t, |p: &ObjectivePoint| p.e] {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| key(&points[front[a]]).total_cmp(&key(&points[front[b]])));
        let lo = key(&points[front[order[0]]]);
        let hi = key(&points[front[order[n - 1]]]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for k in 1..n - 1 {
                let gap = key(&points[front[order[k + 1]]]) - key(&points[front[order[k - 1]]]);
                dist[order[k]] += gap / (hi - lo);
            }
        }
    }
    dist
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HvMode {
    Fixed,
    Auto,
}

/// Reference point for the normalized hypervolume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvConfig {
    pub t_ref: f64,
    pub e_ref: f64,
    pub mode: HvMode,
}

impl Default for HvConfig {
    /// `[50, 100]` (ms, J).
    fn default() -> Self {
        HvConfig::new(50.0, 100.0)
    }
}

impl HvConfig {
    pub fn new(t_ref: f64, e_ref: f64) -> Self {
        assert!(t_ref > 0.0 && e_ref > 0.0, "reference point must be positive");
        HvConfig {
            t_ref,
            e_ref,
            mode: HvMode::Fixed,
        }
    }

    /// 1.1 times the nadir of the union of all given fronts.
    pub fn auto<'a>(fronts: impl IntoIterator<Item = &'a [ObjectivePoint]>) -> Self {
        let (mut t, mut e) = (0.0f64, 0.0f64);
        for p in fronts.into_iter().flatten() {
            t = t.max(p.t);
            e = e.max(p.e);
        }
        HvConfig {
            t_ref: if t > 0.0 { 1.1 * t } else { 1.0 },
            e_ref: if e > 0.0 { 1.1 * e } else { 1.0 },
            mode: HvMode::Auto,
        }
    }
}

/// Area of the union of `[T/T_ref, 1] x [E/E_ref, 1]` over the front, with
/// coordinates clamped to at most 1.
pub fn hypervolume_norm(front: &[ObjectivePoint], cfg: &HvConfig) -> f64 {
    let mut pts: Vec<(f64, f64)> = front
        .iter()
        .map(|p| ((p.t / cfg.t_ref).min(1.0), (p.e / cfg.e_ref).min(1.0)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut floor = 1.0;
    for (t, e) in pts {
        if e < floor {
            area += (1.0 - t) * (floor - e);
            floor = e;
        }
    }
    area
}

/// Per-instance sets of mutually non-dominated `(point, solution)` entries.
#[derive(Clone, Debug, Default)]
pub struct ParetoArchive<S> {
    fronts: BTreeMap<String, Vec<(ObjectivePoint, S)>>,
}

impl<S> ParetoArchive<S> {
    pub fn new() -> Self {
        ParetoArchive {
            fronts: BTreeMap::new(),
        }
    }

    /// Inserts unless an existing entry dominates or equals `point`; entries
    /// dominated by `point` are dropped. Returns whether it was inserted.
    pub fn insert(&mut self, instance_id: &str, point: ObjectivePoint, solution: S) -> bool {
        let Some(front) = self.fronts.get_mut(instance_id) else {
            self.fronts
                .insert(instance_id.to_string(), vec![(point, solution)]);
            return true;
        };
        if front
            .iter()
            .any(|(q, _)| *q == point || dominates(q, &point))
        {
            return false;
        }
        front.retain(|(q, _)| !dominates(&point, q));
        front.push((point, solution));
        true
    }

    pub fn front(&self, instance_id: &str) -> &[(ObjectivePoint, S)] {
        self.fronts.get(instance_id).map_or(&[], |v| v.as_slice())
    }

    pub fn points(&self, instance_id: &str) -> Vec<ObjectivePoint> {
        self.front(instance_id).iter().map(|(p, _)| *p).collect()
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &str> {
        self.fronts.keys().map(|k| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }

    pub fn hypervolume(&self, instance_id: &str, cfg: &HvConfig) -> f64 {
        hypervolume_norm(&self.points(instance_id), cfg)
    }
}
