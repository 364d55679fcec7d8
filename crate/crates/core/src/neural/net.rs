//! Residual heterogeneous message-passing denoiser with hand-written
//! reverse-mode gradients.
//!
//! Every layer updates all node types from the previous layer's states:
//! variable nodes read their user, MEC and space, the other candidates of
//! the same pair, and the variables sharing their `(space, MEC)` replica;
//! users, MECs and spaces sum over their variable nodes, and MECs also sum
//! over their peers. Updates are `h + SiLU(pre)`. Aggregation is a plain sum.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::graph::{
    HeteroGraph, EDGE_FEATURES, MEC_FEATURES, PREF_FEATURES, SPACE_FEATURES, USER_FEATURES,
    VAR_FEATURES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub layers: usize,
    pub hidden: usize,
    /// Width of the sinusoidal step embedding (even).
    pub time_dim: usize,
}

impl NetConfig {
    pub fn desk() -> Self {
        NetConfig {
            layers: 4,
            hidden: 32,
            time_dim: 16,
        }
    }

    pub fn paper() -> Self {
        NetConfig {
            layers: 12,
            hidden: 256,
            time_dim: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.time_dim == 0 || !self.time_dim.is_multiple_of(2) {
            return Err(Error::InvalidConfig(
                "hidden must be positive and time_dim positive and even".into(),
            ));
        }
        Ok(())
    }
}

// input embedding tensors
const E_VAR: usize = 0;
const E_VAR_B: usize = 1;
const E_USER: usize = 2;
const E_USER_B: usize = 3;
const E_MEC: usize = 4;
const E_MEC_B: usize = 5;
const E_SPACE: usize = 6;
const E_SPACE_B: usize = 7;
const EMBED_TENSORS: usize = 8;

// per-layer tensors, offset by layer base
const V_SELF: usize = 0;
const V_USER: usize = 1;
const V_MEC: usize = 2;
const V_SPACE: usize = 3;
const V_PAIR: usize = 4;
const V_COLO: usize = 5;
const V_B: usize = 6;
const V_TIME: usize = 7;
const U_SELF: usize = 8;
const U_VAR: usize = 9;
const U_B: usize = 10;
const M_SELF: usize = 11;
const M_VAR: usize = 12;
const M_PEER: usize = 13;
const M_EDGE: usize = 14;
const M_B: usize = 15;
const S_SELF: usize = 16;
const S_VAR: usize = 17;
const S_B: usize = 18;
const LAYER_TENSORS: usize = 19;

/// Variable-node input width: features, current bit, preference.
pub const VAR_INPUT: usize = VAR_FEATURES + 1 + PREF_FEATURES;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Slot {
    offset: usize,
    rows: usize,
    cols: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    slots: Vec<Slot>,
    total: usize,
}

impl Layout {
    pub fn new(cfg: &NetConfig) -> Self {
        let h = cfg.hidden;
        let mut shapes = vec![
            (VAR_INPUT, h),
            (1, h),
            (USER_FEATURES + PREF_FEATURES, h),
            (1, h),
            (MEC_FEATURES + PREF_FEATURES, h),
            (1, h),
            (SPACE_FEATURES + PREF_FEATURES, h),
            (1, h),
        ];
        for _ in 0..cfg.layers {
            for k in 0..LAYER_TENSORS {
                shapes.push(match k {
                    V_B | U_B | M_B | S_B => (1, h),
                    V_TIME => (cfg.time_dim, h),
                    M_EDGE => (EDGE_FEATURES, h),
                    _ => (h, h),
                });
            }
        }
        shapes.push((h, 1));
        shapes.push((1, 1));
        let mut slots = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (rows, cols) in shapes {
            slots.push(Slot { offset, rows, cols });
            offset += rows * cols;
        }
        Layout {
            slots,
            total: offset,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    fn layer(&self, l: usize, k: usize) -> usize {
        EMBED_TENSORS + l * LAYER_TENSORS + k
    }

    fn head_w(&self) -> usize {
        self.slots.len() - 2
    }

    fn head_b(&self) -> usize {
        self.slots.len() - 1
    }

    fn is_bias(&self, id: usize) -> bool {
        self.slots[id].rows == 1
    }
}

/// Flat parameter vector of the denoiser.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserParams {
    pub cfg: NetConfig,
    layout: Layout,
    pub data: Vec<f64>,
}

impl DenoiserParams {
    pub fn zeros(cfg: NetConfig) -> Self {
        let layout = Layout::new(&cfg);
        let data = vec![0.0; layout.total()];
        DenoiserParams { cfg, layout, data }
    }

    /// Scaled Gaussian weights; biases zero. Residual branches start small.
    pub fn init<R: Rng + ?Sized>(cfg: NetConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        let n_layers = cfg.layers.max(1) as f64;
        for id in 0..p.layout.slots.len() {
            if p.layout.is_bias(id) {
                continue;
            }
            let slot = p.layout.slots[id];
            let mut std = 1.0 / (slot.rows as f64).sqrt();
            if id >= EMBED_TENSORS && id < p.layout.head_w() {
                std *= 0.5 / n_layers.sqrt();
            }
            let normal = Normal::new(0.0, std).expect("finite std");
            for x in &mut p.data[slot.offset..slot.offset + slot.rows * slot.cols] {
                *x = normal.sample(rng);
            }
        }
        p
    }

    pub fn from_flat(cfg: NetConfig, data: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(&cfg);
        if data.len() != layout.total() {
            return Err(Error::Dimension(format!(
                "{} parameters for an architecture of {}",
                data.len(),
                layout.total()
            )));
        }
        Ok(DenoiserParams { cfg, layout, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn view(&self, id: usize) -> ArrayView2<'_, f64> {
        let s = self.layout.slots[id];
        ArrayView2::from_shape((s.rows, s.cols), &self.data[s.offset..s.offset + s.rows * s.cols])
            .expect("layout matches storage")
    }

    /// Indices of the output-head parameters in the flat vector.
    pub fn head_indices(&self) -> std::ops::Range<usize> {
        let w = self.layout.slots[self.layout.head_w()];
        let b = self.layout.slots[self.layout.head_b()];
        w.offset..b.offset + 1
    }
}

fn add_into(grad: &mut [f64], layout: &Layout, id: usize, g: &Array2<f64>) {
    let s = layout.slots[id];
    debug_assert_eq!(g.dim(), (s.rows, s.cols));
    for (dst, src) in grad[s.offset..s.offset + s.rows * s.cols].iter_mut().zip(g.iter()) {
        *dst += src;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_prob(logit: f64) -> f64 {
    sigmoid(logit)
}

fn silu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| x * sigmoid(x))
}

fn silu_grad(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|x| {
        let s = sigmoid(x);
        s * (1.0 + x * (1.0 - s))
    })
}

/// Sinusoidal embedding of step `t`.
pub fn time_embedding(t: usize, dim: usize) -> Array1<f64> {
    let half = dim / 2;
    let mut out = Array1::zeros(dim);
    for k in 0..half {
        let freq = 1.0 / 10_000f64.powf(k as f64 / half as f64);
        out[2 * k] = (t as f64 * freq).sin();
        out[2 * k + 1] = (t as f64 * freq).cos();
    }
    out
}

fn gather(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    a.select(Axis(0), idx)
}

fn scatter(src: &Array2<f64>, idx: &[usize], n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, src.ncols()));
    for (row, &i) in src.outer_iter().zip(idx) {
        let mut dst = out.row_mut(i);
        dst += &row;
    }
    out
}

/// Sum over the group of each row, broadcast back to the row.
fn group_sum(a: &Array2<f64>, group: &[usize], n: usize) -> Array2<f64> {
    gather(&scatter(a, group, n), group)
}

/// Sum over every other row.
fn peer_sum(a: &Array2<f64>) -> Array2<f64> {
    let total = a.sum_axis(Axis(0));
    let mut out = -a.clone();
    out += &total;
    out
}

fn with_pref(feat: &Array2<f64>, pref: [f64; 2], extra: Option<&[u8]>) -> Array2<f64> {
    let n = feat.nrows();
    let f = feat.ncols();
    let width = f + extra.map_or(0, |_| 1) + PREF_FEATURES;
    let mut out = Array2::zeros((n, width));
    out.slice_mut(s![.., ..f]).assign(feat);
    let mut col = f;
    if let Some(bits) = extra {
        for (i, &b) in bits.iter().enumerate() {
            out[[i, col]] = b as f64;
        }
        col += 1;
    }
    for i in 0..n {
        out[[i, col]] = pref[0];
        out[[i, col + 1]] = pref[1];
    }
    out
}

#[derive(Clone, Debug)]
struct LayerTrace {
    hv: Array2<f64>,
    hu: Array2<f64>,
    hm: Array2<f64>,
    hs: Array2<f64>,
    pair: Array2<f64>,
    colo: Array2<f64>,
    su: Array2<f64>,
    sm: Array2<f64>,
    ss: Array2<f64>,
    peer: Array2<f64>,
    pre_v: Array2<f64>,
    pre_u: Array2<f64>,
    pre_m: Array2<f64>,
    pre_s: Array2<f64>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    xv: Array2<f64>,
    xu: Array2<f64>,
    xm: Array2<f64>,
    xs: Array2<f64>,
    temb: Array1<f64>,
    layers: Vec<LayerTrace>,
    hv: Array2<f64>,
    hm: Array2<f64>,
    pub logits: Vec<f64>,
}

impl Trace {
    pub fn probs(&self) -> Vec<f64> {
        self.logits.iter().map(|&z| sigmoid(z)).collect()
    }

    /// Mean final variable and MEC embeddings, concatenated.
    pub fn pooled(&self) -> Vec<f64> {
        let mean = |a: &Array2<f64>| -> Vec<f64> {
            if a.nrows() == 0 {
                vec![0.0; a.ncols()]
            } else {
                a.mean_axis(Axis(0)).expect("non-empty").to_vec()
            }
        };
        let mut v = mean(&self.hv);
        v.extend(mean(&self.hm));
        v
    }
}

fn pair_groups(g: &HeteroGraph) -> Vec<usize> {
    (0..g.num_vars()).map(|j| j / g.num_mecs.max(1)).collect()
}

/// Forward pass on state `x_t` at step `t`.
pub fn forward(p: &DenoiserParams, g: &HeteroGraph, x_t: &[u8], t: usize) -> Result<Trace> {
    if x_t.len() != g.num_vars() {
        return Err(Error::Dimension(format!(
            "state of {} bits for {} variable nodes",
            x_t.len(),
            g.num_vars()
        )));
    }
    let lay = &p.layout;
    let pref = g.pref.as_array();
    let xv = with_pref(&g.var_feat, pref, Some(x_t));
    let xu = with_pref(&g.user_feat, pref, None);
    let xm = with_pref(&g.mec_feat, pref, None);
    let xs = with_pref(&g.space_feat, pref, None);
    let mut hv = xv.dot(&p.view(E_VAR)) + p.view(E_VAR_B);
    let mut hu = xu.dot(&p.view(E_USER)) + p.view(E_USER_B);
    let mut hm = xm.dot(&p.view(E_MEC)) + p.view(E_MEC_B);
    let mut hs = xs.dot(&p.view(E_SPACE)) + p.view(E_SPACE_B);
    let temb = time_embedding(t, p.cfg.time_dim);
    let temb_row = temb.view().insert_axis(Axis(0));
    let pairs = pair_groups(g);

    let mut layers = Vec::with_capacity(p.cfg.layers);
    for l in 0..p.cfg.layers {
        let w = |k: usize| p.view(lay.layer(l, k));
        let pair = group_sum(&hv, &pairs, g.num_pairs);
        let colo = group_sum(&hv, &g.var_colo, g.num_colo);
        let su = scatter(&hv, &g.var_user, g.num_users);
        let sm = scatter(&hv, &g.var_mec, g.num_mecs);
        let ss = scatter(&hv, &g.var_space, g.num_spaces);
        let peer = peer_sum(&hm);

        let mut pre_v = hv.dot(&w(V_SELF))
            + gather(&hu.dot(&w(V_USER)), &g.var_user)
            + gather(&hm.dot(&w(V_MEC)), &g.var_mec)
            + gather(&hs.dot(&w(V_SPACE)), &g.var_space)
            + pair.dot(&w(V_PAIR))
            + colo.dot(&w(V_COLO));
        pre_v += &w(V_B);
        pre_v += &temb_row.dot(&w(V_TIME));
        let pre_u = hu.dot(&w(U_SELF)) + su.dot(&w(U_VAR)) + w(U_B);
        let pre_m = hm.dot(&w(M_SELF))
            + sm.dot(&w(M_VAR))
            + peer.dot(&w(M_PEER))
            + g.mec_edge_sum.dot(&w(M_EDGE))
            + w(M_B);
        let pre_s = hs.dot(&w(S_SELF)) + ss.dot(&w(S_VAR)) + w(S_B);

        let nv = &hv + &silu(&pre_v);
        let nu = &hu + &silu(&pre_u);
        let nm = &hm + &silu(&pre_m);
        let ns = &hs + &silu(&pre_s);
        layers.push(LayerTrace {
            hv: std::mem::replace(&mut hv, nv),
            hu: std::mem::replace(&mut hu, nu),
            hm: std::mem::replace(&mut hm, nm),
            hs: std::mem::replace(&mut hs, ns),
            pair,
            colo,
            su,
            sm,
            ss,
            peer,
            pre_v,
            pre_u,
            pre_m,
            pre_s,
        });
    }
    let logits = hv.dot(&p.view(lay.head_w())) + p.view(lay.head_b());
    Ok(Trace {
        xv,
        xu,
        xm,
        xs,
        temb,
        layers,
        hv,
        hm,
        logits: logits.column(0).to_vec(),
    })
}

/// Accumulates `∂L/∂θ` into `grad` given `∂L/∂logits`.
pub fn backward(p: &DenoiserParams, g: &HeteroGraph, tr: &Trace, dlogits: &[f64], grad: &mut [f64]) {
    assert_eq!(grad.len(), p.len());
    assert_eq!(dlogits.len(), tr.logits.len());
    let lay = &p.layout;
    let h = p.cfg.hidden;
    let dz = Array2::from_shape_vec((dlogits.len(), 1), dlogits.to_vec()).expect("column");
    add_into(grad, lay, lay.head_w(), &tr.hv.t().dot(&dz));
    add_into(grad, lay, lay.head_b(), &dz.sum_axis(Axis(0)).insert_axis(Axis(0)));
    let mut dhv = dz.dot(&p.view(lay.head_w()).t());
    let mut dhu = Array2::zeros((g.num_users, h));
    let mut dhm = Array2::zeros((g.num_mecs, h));
    let mut dhs = Array2::zeros((g.num_spaces, h));
    let pairs = pair_groups(g);
    let temb_row = tr.temb.view().insert_axis(Axis(0));

    for l in (0..p.cfg.layers).rev() {
        let lt = &tr.layers[l];
        let w = |k: usize| p.view(lay.layer(l, k));
        let id = |k: usize| lay.layer(l, k);
        let dpv = &dhv * &silu_grad(&lt.pre_v);
        let dpu = &dhu * &silu_grad(&lt.pre_u);
        let dpm = &dhm * &silu_grad(&lt.pre_m);
        let dps = &dhs * &silu_grad(&lt.pre_s);

        // variable update
        add_into(grad, lay, id(V_SELF), &lt.hv.t().dot(&dpv));
        let du_proj = scatter(&dpv, &g.var_user, g.num_users);
        let dm_proj = scatter(&dpv, &g.var_mec, g.num_mecs);
        let ds_proj = scatter(&dpv, &g.var_space, g.num_spaces);
        add_into(grad, lay, id(V_USER), &lt.hu.t().dot(&du_proj));
        add_into(grad, lay, id(V_MEC), &lt.hm.t().dot(&dm_proj));
        add_into(grad, lay, id(V_SPACE), &lt.hs.t().dot(&ds_proj));
        add_into(grad, lay, id(V_PAIR), &lt.pair.t().dot(&dpv));
        add_into(grad, lay, id(V_COLO), &lt.colo.t().dot(&dpv));
        let dbv = dpv.sum_axis(Axis(0)).insert_axis(Axis(0));
        add_into(grad, lay, id(V_TIME), &temb_row.t().dot(&dbv));
        add_into(grad, lay, id(V_B), &dbv);

        // user, MEC and space updates
        add_into(grad, lay, id(U_SELF), &lt.hu.t().dot(&dpu));
        add_into(grad, lay, id(U_VAR), &lt.su.t().dot(&dpu));
        add_into(grad, lay, id(U_B), &dpu.sum_axis(Axis(0)).insert_axis(Axis(0)));
        add_into(grad, lay, id(M_SELF), &lt.hm.t().dot(&dpm));
        add_into(grad, lay, id(M_VAR), &lt.sm.t().dot(&dpm));
        add_into(grad, lay, id(M_PEER), &lt.peer.t().dot(&dpm));
        add_into(grad, lay, id(M_EDGE), &g.mec_edge_sum.t().dot(&dpm));
        add_into(grad, lay, id(M_B), &dpm.sum_axis(Axis(0)).insert_axis(Axis(0)));
        add_into(grad, lay, id(S_SELF), &lt.hs.t().dot(&dps));
        add_into(grad, lay, id(S_VAR), &lt.ss.t().dot(&dps));
        add_into(grad, lay, id(S_B), &dps.sum_axis(Axis(0)).insert_axis(Axis(0)));

        // gradients w.r.t. the layer inputs
        let mut nv = dhv.clone();
        nv += &dpv.dot(&w(V_SELF).t());
        nv += &group_sum(&dpv.dot(&w(V_PAIR).t()), &pairs, g.num_pairs);
        nv += &group_sum(&dpv.dot(&w(V_COLO).t()), &g.var_colo, g.num_colo);
        nv += &gather(&dpu.dot(&w(U_VAR).t()), &g.var_user);
        nv += &gather(&dpm.dot(&w(M_VAR).t()), &g.var_mec);
        nv += &gather(&dps.dot(&w(S_VAR).t()), &g.var_space);

        let mut nu = dhu.clone();
        nu += &dpu.dot(&w(U_SELF).t());
        nu += &du_proj.dot(&w(V_USER).t());

        let mut nm = dhm.clone();
        nm += &dpm.dot(&w(M_SELF).t());
        nm += &peer_sum(&dpm.dot(&w(M_PEER).t()));
        nm += &dm_proj.dot(&w(V_MEC).t());

        let mut ns = dhs.clone();
        ns += &dps.dot(&w(S_SELF).t());
        ns += &ds_proj.dot(&w(V_SPACE).t());

        dhv = nv;
        dhu = nu;
        dhm = nm;
        dhs = ns;
    }

    for (e, eb, x, d) in [
        (E_VAR, E_VAR_B, &tr.xv, &dhv),
        (E_USER, E_USER_B, &tr.xu, &dhu),
        (E_MEC, E_MEC_B, &tr.xm, &dhm),
        (E_SPACE, E_SPACE_B, &tr.xs, &dhs),
    ] {
        add_into(grad, lay, e, &x.t().dot(d));
        add_into(grad, lay, eb, &d.sum_axis(Axis(0)).insert_axis(Axis(0)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_mec_instance;
    use crate::instance::{generate_instance, GeneratorConfig};
    use crate::neural::graph::build_graph;
    use crate::preference::PreferenceWeight;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> NetConfig {
        NetConfig {
            layers: 2,
            hidden: 8,
            time_dim: 4,
        }
    }

    #[test]
    fn zero_params_give_half() {
        let inst = two_mec_instance(3);
        let g = build_graph(&inst, PreferenceWeight::LATENCY);
        let p = DenoiserParams::zeros(small());
        let tr = forward(&p, &g, &[0, 1, 1, 0, 1, 0], 10).unwrap();
        assert!(tr.probs().iter().all(|&q| q == 0.5));
        assert!(forward(&p, &g, &[0], 10).is_err());
    }

    #[test]
    fn deterministic_and_mec_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = generate_instance(&GeneratorConfig::desk(), "e", &mut rng).unwrap();
        let p = DenoiserParams::init(small(), &mut rng);
        let g = build_graph(&inst, PreferenceWeight::new(0.3));
        let nm = inst.num_mecs();
        let x: Vec<u8> = (0..g.num_vars()).map(|j| (j % 3 == 0) as u8).collect();
        let a = forward(&p, &g, &x, 77).unwrap().logits;
        assert_eq!(a, forward(&p, &g, &x, 77).unwrap().logits);

        // reverse MEC order
        let perm: Vec<usize> = (0..nm).rev().collect();
        let mut q = inst.clone();
        q.mecs = perm.iter().map(|&m| inst.mecs[m].clone()).collect();
        for u in &mut q.users {
            u.local_mec = nm - 1 - u.local_mec;
        }
        let l = &inst.links;
        q.links.sync_latency = perm.iter().map(|&a| perm.iter().map(|&b| l.sync_latency[a][b]).collect()).collect();
        q.links.sync_energy = perm.iter().map(|&a| perm.iter().map(|&b| l.sync_energy[a][b]).collect()).collect();
        q.links.sensor_latency = l.sensor_latency.iter().map(|r| perm.iter().map(|&m| r[m]).collect()).collect();
        q.links.sensor_energy = l.sensor_energy.iter().map(|r| perm.iter().map(|&m| r[m]).collect()).collect();
        q.links.frame_latency_coeff = perm.iter().map(|&m| l.frame_latency_coeff[m].clone()).collect();
        q.links.frame_energy_coeff = perm.iter().map(|&m| l.frame_energy_coeff[m].clone()).collect();
        let gq = build_graph(&q, PreferenceWeight::new(0.3));
        let xq: Vec<u8> = (0..g.num_vars()).map(|j| x[(j / nm) * nm + (nm - 1 - j % nm)]).collect();
        let b = forward(&p, &gq, &xq, 77).unwrap().logits;
        for j in 0..a.len() {
            let k = (j / nm) * nm + (nm - 1 - j % nm);
            assert!((a[j] - b[k]).abs() < 1e-10);
        }
    }
}
