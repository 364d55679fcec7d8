//! Heterogeneous graph encoding of an instance under a preference weight.
//!
//! Node types: users, MECs, spaces and one variable node per admissible
//! `(user, space, MEC)` triple. Variable node `pair * |M| + m` matches the
//! marginal layout used by the repair.

use ndarray::Array2;

use crate::costmodel::CYCLE_ENERGY_SCALE;
use crate::instance::Instance;
use crate::preference::PreferenceWeight;

pub const VAR_FEATURES: usize = 9;
pub const USER_FEATURES: usize = 3;
pub const MEC_FEATURES: usize = 3;
pub const SPACE_FEATURES: usize = 5;
pub const EDGE_FEATURES: usize = 2;
pub const PREF_FEATURES: usize = 2;

// fixed feature scales, sized to the generator's level sets
const SCALE_SENSOR_LATENCY: f64 = 5.0;
const SCALE_SENSOR_ENERGY: f64 = 5.0;
const SCALE_FRAME_LATENCY: f64 = 100.0;
const SCALE_FRAME_ENERGY: f64 = 20.0;
const SCALE_COMPUTE_LATENCY: f64 = 50.0;
const SCALE_COMPUTE_ENERGY: f64 = 200.0;
const SCALE_EDGE_LATENCY: f64 = 0.03;
const SCALE_EDGE_ENERGY: f64 = 0.005;
const SCALE_CAPACITY: f64 = 20_000.0;
const SCALE_FREQUENCY: f64 = 5.0;
const SCALE_TASKS: f64 = 15.0;
const SCALE_CACHE: f64 = 1_500.0;
const SCALE_MAINT: f64 = 50.0;
const SCALE_WORKLOAD: f64 = 150.0;
const SCALE_FRAME: f64 = 150.0;
const SCALE_DEMAND: f64 = 5.0;
const SCALE_SYNC: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct HeteroGraph {
    pub num_users: usize,
    pub num_mecs: usize,
    pub num_spaces: usize,
    pub num_pairs: usize,
    pub var_user: Vec<usize>,
    pub var_mec: Vec<usize>,
    pub var_space: Vec<usize>,
    /// Variable nodes sharing `(space, MEC)`.
    pub var_colo: Vec<usize>,
    pub num_colo: usize,
    pub var_feat: Array2<f64>,
    pub user_feat: Array2<f64>,
    pub mec_feat: Array2<f64>,
    pub space_feat: Array2<f64>,
    /// Per MEC, summed features of its edges to every other MEC.
    pub mec_edge_sum: Array2<f64>,
    pub pref: PreferenceWeight,
}

impl HeteroGraph {
    pub fn num_vars(&self) -> usize {
        self.var_user.len()
    }

    /// Same graph under a different preference weight.
    pub fn with_pref(&self, w: PreferenceWeight) -> Self {
        HeteroGraph {
            pref: w,
            ..self.clone()
        }
    }
}

pub fn build_graph(inst: &Instance, w: PreferenceWeight) -> HeteroGraph {
    let (nu, nm, nv) = (inst.num_users(), inst.num_mecs(), inst.num_spaces());
    let pairs = inst.pairs();
    let nvar = pairs.len() * nm;
    let l = &inst.links;
    let cscale = inst.constants.energy_coeff * CYCLE_ENERGY_SCALE;

    let mut var_user = Vec::with_capacity(nvar);
    let mut var_mec = Vec::with_capacity(nvar);
    let mut var_space = Vec::with_capacity(nvar);
    let mut var_colo = Vec::with_capacity(nvar);
    let mut var_feat = Array2::zeros((nvar, VAR_FEATURES));
    for (i, pair) in pairs.iter().enumerate() {
        let s = &inst.spaces[pair.space];
        let (u, v) = (pair.user, pair.space);
        for m in 0..nm {
            let j = i * nm + m;
            var_user.push(u);
            var_mec.push(m);
            var_space.push(v);
            var_colo.push(v * nm + m);
            let mec = &inst.mecs[m];
            let f = mec.frequency;
            let row = [
                pair.prob,
                if inst.users[u].local_mec == m { 1.0 } else { 0.0 },
                l.sensor_latency[u][m] / SCALE_SENSOR_LATENCY,
                l.sensor_energy[u][m] / SCALE_SENSOR_ENERGY,
                l.frame_latency_coeff[m][u] * s.frame_size / SCALE_FRAME_LATENCY,
                l.frame_energy_coeff[m][u] * s.frame_size / SCALE_FRAME_ENERGY,
                s.workload / f / SCALE_COMPUTE_LATENCY,
                cscale * s.workload * f * f / SCALE_COMPUTE_ENERGY,
                s.cache_size / mec.cache_capacity,
            ];
            for (k, x) in row.into_iter().enumerate() {
                var_feat[[j, k]] = x;
            }
        }
    }

    let mut user_feat = Array2::zeros((nu, USER_FEATURES));
    for (u, user) in inst.users.iter().enumerate() {
        user_feat[[u, 0]] = user.edge_latency_coeff / SCALE_EDGE_LATENCY;
        user_feat[[u, 1]] = user.edge_energy_coeff / SCALE_EDGE_ENERGY;
        user_feat[[u, 2]] = inst.p[u].iter().sum::<f64>();
    }
    let mut mec_feat = Array2::zeros((nm, MEC_FEATURES));
    for (m, mec) in inst.mecs.iter().enumerate() {
        mec_feat[[m, 0]] = mec.cache_capacity / SCALE_CAPACITY;
        mec_feat[[m, 1]] = mec.frequency / SCALE_FREQUENCY;
        mec_feat[[m, 2]] = mec.max_tasks as f64 / SCALE_TASKS;
    }
    let mut space_feat = Array2::zeros((nv, SPACE_FEATURES));
    for (v, s) in inst.spaces.iter().enumerate() {
        let demand: f64 = inst.p.iter().map(|row| row[v]).sum();
        let row = [
            s.cache_size / SCALE_CACHE,
            s.maint_energy / SCALE_MAINT,
            s.workload / SCALE_WORKLOAD,
            s.frame_size / SCALE_FRAME,
            demand / SCALE_DEMAND,
        ];
        for (k, x) in row.into_iter().enumerate() {
            space_feat[[v, k]] = x;
        }
    }
    let mut mec_edge_sum = Array2::zeros((nm, EDGE_FEATURES));
    for m in 0..nm {
        for n in (0..nm).filter(|&n| n != m) {
            mec_edge_sum[[m, 0]] += l.sync_latency[m][n] / SCALE_SYNC;
            mec_edge_sum[[m, 1]] += l.sync_energy[m][n] / SCALE_SYNC;
        }
    }

    HeteroGraph {
        num_users: nu,
        num_mecs: nm,
        num_spaces: nv,
        num_pairs: pairs.len(),
        var_user,
        var_mec,
        var_space,
        var_colo,
        num_colo: nv * nm,
        var_feat,
        user_feat,
        mec_feat,
        space_feat,
        mec_edge_sum,
        pref: w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_mec_instance;

    #[test]
    fn variable_nodes_follow_admissible_triples() {
        let inst = two_mec_instance(1);
        let g = build_graph(&inst, PreferenceWeight::LATENCY);
        assert_eq!(g.num_vars(), 2);
        assert_eq!(g.var_mec, vec![0, 1]);
        assert_eq!(g.var_feat[[0, 1]], 1.0);
        assert_eq!(g.var_feat[[1, 1]], 0.0);

        let mut idle = two_mec_instance(2);
        idle.p = vec![vec![0.0]; 2];
        assert_eq!(build_graph(&idle, PreferenceWeight::LATENCY).num_vars(), 0);
    }

    #[test]
    fn preference_only_changes_global_feature() {
        let inst = two_mec_instance(3);
        let a = build_graph(&inst, PreferenceWeight::LATENCY);
        let b = build_graph(&inst, PreferenceWeight::ENERGY);
        assert_ne!(a, b);
        assert_eq!(a, b.with_pref(PreferenceWeight::LATENCY));
    }
}
