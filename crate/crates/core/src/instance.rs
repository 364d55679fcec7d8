//! Problem data: users, edge nodes, virtual spaces, request probabilities and
//! link costs, plus the randomized generator and cell-tower ingestion.
//!
//! Canonical units: latency in milliseconds, energy in joules, data in
//! megabits, cache in megabytes, workload in mega-cycles and frequency in
//! giga-cycles per second.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const EARTH_RADIUS_KM: f64 = 6371.0;
const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualSpaceSpec {
    /// Cached package size (MB).
    pub cache_size: f64,
    /// Maintenance energy per cached replica (J).
    pub maint_energy: f64,
    /// Rendering workload per user (mega-cycles).
    pub workload: f64,
    /// Viewport frame size per user (Mbit).
    pub frame_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MecSpec {
    /// Cache capacity (MB).
    pub cache_capacity: f64,
    /// Computation frequency (GHz).
    pub frequency: f64,
    pub max_tasks: u32,
    pub location: GeoPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub local_mec: usize,
    /// Base-station-to-device frame latency (ms/Mbit).
    pub edge_latency_coeff: f64,
    /// Base-station-to-device frame energy (J/Mbit).
    pub edge_energy_coeff: f64,
}

/// Pairwise link costs. `sync_*` are |M|x|M|, `sensor_*` are |U|x|M| and
/// `frame_*` are |M|x|U|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCosts {
    pub sync_latency: Vec<Vec<f64>>,
    pub sync_energy: Vec<Vec<f64>>,
    pub sensor_latency: Vec<Vec<f64>>,
    pub sensor_energy: Vec<Vec<f64>>,
    pub frame_latency_coeff: Vec<Vec<f64>>,
    pub frame_energy_coeff: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConstants {
    /// Hardware energy coefficient (s·J/cycle).
    pub energy_coeff: f64,
    pub per_km_sync_latency: f64,
    pub per_km_sync_energy: f64,
    pub per_km_frame_latency: f64,
    pub per_km_frame_energy: f64,
}

impl Default for SystemConstants {
    fn default() -> Self {
        SystemConstants {
            energy_coeff: 1e-25,
            per_km_sync_latency: 0.1,
            per_km_sync_energy: 0.15,
            per_km_frame_latency: 0.06,
            per_km_frame_energy: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub v: u32,
    pub id: String,
    pub constants: SystemConstants,
    pub spaces: Vec<VirtualSpaceSpec>,
    pub mecs: Vec<MecSpec>,
    pub users: Vec<UserSpec>,
    /// Request probabilities, |U| rows of |V| entries.
    pub p: Vec<Vec<f64>>,
    pub links: LinkCosts,
}

/// A (user, space) combination with positive request probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub user: usize,
    pub space: usize,
    pub prob: f64,
}

impl Instance {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_spaces(&self) -> usize {
        self.spaces.len()
    }

    pub fn num_mecs(&self) -> usize {
        self.mecs.len()
    }

    /// Required pairs in canonical (user, space) order.
    pub fn pair_iter(&self) -> impl Iterator<Item = Pair> + '_ {
        self.p.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(move |(v, &p)| Pair {
                    user: u,
                    space: v,
                    prob: p,
                })
        })
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.pair_iter().collect()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_iter().count()
    }

    /// Mean great-circle distance over all unordered MEC pairs (km).
    pub fn mean_intercell_km(&self) -> f64 {
        let m = self.mecs.len();
        if m < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for a in 0..m {
            for b in a + 1..m {
                total += haversine_km(self.mecs[a].location, self.mecs[b].location);
                count += 1;
            }
        }
        total / count as f64
    }

    pub fn load(path: &Path) -> Result<Instance> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let inst: Instance = serde_json::from_str(&text)?;
        if inst.v != SCHEMA_VERSION {
            return Err(Error::Schema {
                found: inst.v,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub lat: f64,
    pub lon: f64,
    pub user_count: u64,
}

#[derive(Clone, Debug)]
pub struct CellIngest {
    pub records: Vec<CellRecord>,
    /// Rows that could not be parsed or carried invalid coordinates.
    pub skipped: usize,
}

/// Reads a cell CSV (`lat`, `lon`, `samples` columns) and keeps cells with
/// strictly more than `min_users` users, in file order.
pub fn ingest_cells(csv_path: &Path, min_users: u64) -> Result<CellIngest> {
    let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(_) => {
            return Err(Error::EmptyDataset {
                path: csv_path.into(),
                skipped: 0,
            })
        }
    };
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(lat_i), Some(lon_i), Some(n_i)) = (col("lat"), col("lon"), col("samples")) else {
        return Err(Error::EmptyDataset {
            path: csv_path.into(),
            skipped: 0,
        });
    };

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for row in reader.records() {
        let Ok(row) = row else {
            skipped += 1;
            continue;
        };
        let parsed = (|| {
            let lat: f64 = row.get(lat_i)?.trim().parse().ok()?;
            let lon: f64 = row.get(lon_i)?.trim().parse().ok()?;
            let n: u64 = row.get(n_i)?.trim().parse().ok()?;
            Some(CellRecord {
                lat,
                lon,
                user_count: n,
            })
        })();
        match parsed {
            Some(c) if GeoPoint::new(c.lat, c.lon).is_valid() => {
                if c.user_count > min_users {
                    records.push(c);
                }
            }
            _ => skipped += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset {
            path: csv_path.into(),
            skipped,
        });
    }
    Ok(CellIngest { records, skipped })
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = la2 - la1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Distance-proportional link costs. Entries between a user and its own
/// local MEC are zero, as are the diagonals.
pub fn derive_link_costs(
    locations: &[GeoPoint],
    local_map: &[usize],
    constants: &SystemConstants,
) -> LinkCosts {
    let m = locations.len();
    let dist: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    if a == b {
                        0.0
                    } else {
                        haversine_km(locations[a], locations[b])
                    }
                })
                .collect()
        })
        .collect();
    let scaled = |k: f64| -> Vec<Vec<f64>> {
        dist.iter()
            .map(|row| row.iter().map(|d| d * k).collect())
            .collect()
    };
    let per_user = |k: f64| -> Vec<Vec<f64>> {
        local_map
            .iter()
            .map(|&lp| (0..m).map(|n| dist[lp][n] * k).collect())
            .collect()
    };
    let per_mec = |k: f64| -> Vec<Vec<f64>> {
        (0..m)
            .map(|n| local_map.iter().map(|&lp| dist[n][lp] * k).collect())
            .collect()
    };
    LinkCosts {
        sync_latency: scaled(constants.per_km_sync_latency),
        sync_energy: scaled(constants.per_km_sync_energy),
        sensor_latency: per_user(constants.per_km_sync_latency),
        sensor_energy: per_user(constants.per_km_sync_energy),
        frame_latency_coeff: per_mec(constants.per_km_frame_latency),
        frame_energy_coeff: per_mec(constants.per_km_frame_energy),
    }
}

/// Where MEC locations come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationSource {
    /// Uniform in a disk of `radius_km` around `center`.
    Synthetic { center: GeoPoint, radius_km: f64 },
    /// Sample MEC sites without replacement from ingested cells.
    Cells(Vec<CellRecord>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub num_users: usize,
    pub num_spaces: usize,
    pub num_mecs: usize,
    pub cache_levels: Vec<f64>,
    pub energy_levels: Vec<f64>,
    pub workload_levels: Vec<f64>,
    pub frame_levels: Vec<f64>,
    pub cache_capacity_range: (f64, f64),
    pub frequency_range: (f64, f64),
    pub max_tasks_range: (u32, u32),
    pub constants: SystemConstants,
    pub locations: LocationSource,
    /// Probability that a user is offline (all-zero request row).
    pub p_offline: f64,
    /// Inclusive range of active spaces per online user.
    pub active_spaces: (usize, usize),
    /// Row sum `s` is drawn from `(lo, hi]`.
    pub row_sum_range: (f64, f64),
    /// Users sit uniformly within this distance of their base station.
    pub user_radius_km: f64,
    pub retry_budget: usize,
}

impl GeneratorConfig {
    /// 20 MECs, 50 users, 10 spaces with the full level sets.
    pub fn paper() -> Self {
        GeneratorConfig {
            num_users: 50,
            num_spaces: 10,
            num_mecs: 20,
            cache_levels: vec![10.0, 50.0, 100.0, 500.0, 1000.0, 1500.0],
            energy_levels: vec![10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
            workload_levels: vec![20.0, 50.0, 80.0, 100.0, 120.0, 150.0],
            frame_levels: vec![10.0, 25.0, 50.0, 100.0, 120.0, 150.0],
            cache_capacity_range: (15_000.0, 20_000.0),
            frequency_range: (2.0, 5.0),
            max_tasks_range: (10, 15),
            constants: SystemConstants::default(),
            locations: LocationSource::Synthetic {
                center: GeoPoint::new(37.35, -121.95),
                radius_km: 8.0,
            },
            p_offline: 0.1,
            active_spaces: (1, 3),
            row_sum_range: (0.0, 1.0),
            user_radius_km: 0.5,
            retry_budget: 100,
        }
    }

    /// Small instances that the exact oracle certifies quickly.
    pub fn desk() -> Self {
        GeneratorConfig {
            num_users: 6,
            num_spaces: 3,
            num_mecs: 4,
            cache_capacity_range: (1_000.0, 3_000.0),
            max_tasks_range: (3, 6),
            active_spaces: (1, 2),
            locations: LocationSource::Synthetic {
                center: GeoPoint::new(37.35, -121.95),
                radius_km: 20.0,
            },
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_spaces > 0 && self.active_spaces.1 > self.num_spaces {
            return bad("active_spaces upper bound exceeds the number of spaces");
        }
        if self.active_spaces.0 > self.active_spaces.1 || self.active_spaces.0 == 0 {
            return bad("active_spaces must be a non-empty range starting at 1 or more");
        }
        if self.num_users > 0 && self.num_mecs == 0 {
            return bad("users require at least one MEC");
        }
        if !(0.0..=1.0).contains(&self.p_offline) {
            return bad("p_offline must lie in [0, 1]");
        }
        let (lo, hi) = self.row_sum_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0 && hi > 0.0) {
            return bad("row_sum_range must satisfy 0 <= lo <= hi <= 1 and hi > 0");
        }
        for (name, levels) in [
            ("cache_levels", &self.cache_levels),
            ("energy_levels", &self.energy_levels),
            ("workload_levels", &self.workload_levels),
            ("frame_levels", &self.frame_levels),
        ] {
            if levels.is_empty() || levels.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-empty and strictly positive"
                )));
            }
        }
        if self.frequency_range.0 <= 0.0 || self.frequency_range.0 > self.frequency_range.1 {
            return bad("frequency_range must be positive and ordered");
        }
        if self.cache_capacity_range.0 <= 0.0
            || self.cache_capacity_range.0 > self.cache_capacity_range.1
        {
            return bad("cache_capacity_range must be positive and ordered");
        }
        if self.max_tasks_range.0 > self.max_tasks_range.1 {
            return bad("max_tasks_range must be ordered");
        }
        if let LocationSource::Cells(cells) = &self.locations {
            if cells.len() < self.num_mecs {
                return bad("fewer cells than MECs to place");
            }
        }
        Ok(())
    }
}

/// Per-user sparse request rows: offline with probability `p_offline`,
/// otherwise `k'` random spaces with Dirichlet(1) weights scaled to a row sum
/// drawn from `row_sum_range`.
pub fn generate_requests<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let nv = cfg.num_spaces;
    let mut spaces: Vec<usize> = (0..nv).collect();
    (0..cfg.num_users)
        .map(|_| {
            let mut row = vec![0.0; nv];
            if nv == 0 || rng.gen::<f64>() < cfg.p_offline {
                return row;
            }
            let (lo_k, hi_k) = cfg.active_spaces;
            let k = rng.gen_range(lo_k..=hi_k.min(nv));
            let (lo, hi) = cfg.row_sum_range;
            let s = hi - (hi - lo) * rng.gen::<f64>();
            spaces.shuffle(rng);
            let weights: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = weights.iter().sum();
            for (&v, w) in spaces[..k].iter().zip(&weights) {
                row[v] = s * w / total;
            }
            let sum: f64 = row.iter().sum();
            if sum > 1.0 {
                // rounding can overshoot by an ulp
                let (vmax, _) = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
                row[vmax] -= sum - 1.0;
            }
            row
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(levels: &[f64], rng: &mut R) -> f64 {
    levels[rng.gen_range(0..levels.len())]
}

fn uniform<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..=range.1)
    }
}

fn offset_km(center: GeoPoint, east_km: f64, north_km: f64) -> GeoPoint {
    let lat = center.lat + north_km / KM_PER_DEGREE;
    let lon = center.lon + east_km / (KM_PER_DEGREE * center.lat.to_radians().cos());
    GeoPoint::new(lat, lon)
}

/// True when every required pair fits on its user's local MEC.
pub fn all_local_feasible(inst: &Instance) -> bool {
    let nm = inst.num_mecs();
    let mut tasks = vec![0u32; nm];
    let mut cached = vec![vec![false; inst.num_spaces()]; nm];
    for pair in inst.pair_iter() {
        let m = inst.users[pair.user].local_mec;
        tasks[m] += 1;
        cached[m][pair.space] = true;
    }
    (0..nm).all(|m| {
        let used: f64 = cached[m]
            .iter()
            .zip(&inst.spaces)
            .filter(|(c, _)| **c)
            .map(|(_, s)| s.cache_size)
            .sum();
        tasks[m] <= inst.mecs[m].max_tasks && used <= inst.mecs[m].cache_capacity
    })
}

/// Draws an instance whose all-local placement is feasible, retrying up to
/// `cfg.retry_budget` times.
pub fn generate_instance<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    id: &str,
    rng: &mut R,
) -> Result<Instance> {
    cfg.validate()?;
    for _ in 0..cfg.retry_budget.max(1) {
        let inst = draw_instance(cfg, id, rng);
        if all_local_feasible(&inst) {
            return Ok(inst);
        }
    }
    Err(Error::InfeasibleConfig(format!(
        "no instance with a feasible local placement after {} draws",
        cfg.retry_budget.max(1)
    )))
}

fn draw_instance<R: Rng + ?Sized>(cfg: &GeneratorConfig, id: &str, rng: &mut R) -> Instance {
    let spaces = (0..cfg.num_spaces)
        .map(|_| VirtualSpaceSpec {
            cache_size: pick(&cfg.cache_levels, rng),
            maint_energy: pick(&cfg.energy_levels, rng),
            workload: pick(&cfg.workload_levels, rng),
            frame_size: pick(&cfg.frame_levels, rng),
        })
        .collect::<Vec<_>>();

    let (locations, weights): (Vec<GeoPoint>, Vec<f64>) = match &cfg.locations {
        LocationSource::Synthetic { center, radius_km } => (0..cfg.num_mecs)
            .map(|_| {
                let r = radius_km * rng.gen::<f64>().sqrt();
                let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                (offset_km(*center, r * phi.cos(), r * phi.sin()), 1.0)
            })
            .unzip(),
        LocationSource::Cells(cells) => cells
            .choose_multiple(rng, cfg.num_mecs)
            .map(|c| (GeoPoint::new(c.lat, c.lon), c.user_count.max(1) as f64))
            .unzip(),
    };

    let mecs = locations
        .iter()
        .map(|&location| MecSpec {
            cache_capacity: uniform(cfg.cache_capacity_range, rng),
            frequency: uniform(cfg.frequency_range, rng),
            max_tasks: rng.gen_range(cfg.max_tasks_range.0..=cfg.max_tasks_range.1),
            location,
        })
        .collect::<Vec<_>>();

    let total_weight: f64 = weights.iter().sum();
    let users = (0..cfg.num_users)
        .map(|_| {
            let mut target = rng.gen::<f64>() * total_weight;
            let mut local_mec = weights.len() - 1;
            for (m, w) in weights.iter().enumerate() {
                if target < *w {
                    local_mec = m;
                    break;
                }
                target -= w;
            }
            let r = cfg.user_radius_km * rng.gen::<f64>();
            UserSpec {
                local_mec,
                edge_latency_coeff: r * cfg.constants.per_km_frame_latency,
                edge_energy_coeff: r * cfg.constants.per_km_frame_energy,
            }
        })
        .collect::<Vec<_>>();

    let p = generate_requests(cfg, rng);
    let local_map: Vec<usize> = users.iter().map(|u| u.local_mec).collect();
    let links = derive_link_costs(&locations, &local_map, &cfg.constants);
    Instance {
        v: SCHEMA_VERSION,
        id: id.to_string(),
        constants: cfg.constants,
        spaces,
        mecs,
        users,
        p,
        links,
    }
}

const PROB_TOL: f64 = 1e-12;

/// Lists every violated data invariant; empty iff the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    let (nu, nv, nm) = (inst.num_users(), inst.num_spaces(), inst.num_mecs());

    let square = |name: &str, mat: &Vec<Vec<f64>>, rows: usize, cols: usize, out: &mut Vec<String>| {
        if mat.len() != rows || mat.iter().any(|r| r.len() != cols) {
            out.push(format!("{name} must be {rows}x{cols}"));
            false
        } else {
            if mat.iter().flatten().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                out.push(format!("{name} has negative or non-finite entries"));
            }
            true
        }
    };

    for (v, s) in inst.spaces.iter().enumerate() {
        if !(s.cache_size > 0.0 && s.maint_energy > 0.0 && s.workload > 0.0 && s.frame_size > 0.0) {
            out.push(format!("space {v} has a non-positive attribute"));
        }
    }
    for (m, mec) in inst.mecs.iter().enumerate() {
        if !(mec.cache_capacity > 0.0 && mec.frequency > 0.0) {
            out.push(format!("mec {m} has non-positive capacity or frequency"));
        }
        if !mec.location.is_valid() {
            out.push(format!("mec {m} has an invalid location"));
        }
    }
    for (u, user) in inst.users.iter().enumerate() {
        if user.local_mec >= nm {
            out.push(format!("user {u} has local mec {} out of range", user.local_mec));
        }
        if !(user.edge_latency_coeff >= 0.0 && user.edge_energy_coeff >= 0.0) {
            out.push(format!("user {u} has negative edge coefficients"));
        }
    }
    let c = &inst.constants;
    if [
        c.energy_coeff,
        c.per_km_sync_latency,
        c.per_km_sync_energy,
        c.per_km_frame_latency,
        c.per_km_frame_energy,
    ]
    .iter()
    .any(|x| !(*x >= 0.0))
    {
        out.push("system constants must be non-negative".into());
    }

    if inst.p.len() != nu || inst.p.iter().any(|r| r.len() != nv) {
        out.push(format!("request matrix must be {nu}x{nv}"));
    } else {
        for (u, row) in inst.p.iter().enumerate() {
            if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                out.push(format!("request probabilities of user {u} leave [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&sum) {
                out.push(format!(
                    "request probabilities of user {u} sum to {sum}, outside [0, 1]"
                ));
            }
        }
    }

    let l = &inst.links;
    let sync_ok = square("sync_latency", &l.sync_latency, nm, nm, &mut out)
        & square("sync_energy", &l.sync_energy, nm, nm, &mut out);
    let sensor_ok = square("sensor_latency", &l.sensor_latency, nu, nm, &mut out)
        & square("sensor_energy", &l.sensor_energy, nu, nm, &mut out);
    let frame_ok = square("frame_latency_coeff", &l.frame_latency_coeff, nm, nu, &mut out)
        & square("frame_energy_coeff", &l.frame_energy_coeff, nm, nu, &mut out);

    if sync_ok {
        for m in 0..nm {
            if l.sync_latency[m][m] != 0.0 || l.sync_energy[m][m] != 0.0 {
                out.push(format!("nonzero sync diagonal at mec {m}"));
            }
            for n in m + 1..nm {
                if l.sync_latency[m][n] != l.sync_latency[n][m]
                    || l.sync_energy[m][n] != l.sync_energy[n][m]
                {
                    out.push(format!("asymmetric sync cost between mecs {m} and {n}"));
                }
            }
        }
    }
    if sensor_ok && frame_ok {
        for (u, user) in inst.users.iter().enumerate() {
            let lp = user.local_mec;
            if lp >= nm {
                continue;
            }
            if l.sensor_latency[u][lp] != 0.0
                || l.sensor_energy[u][lp] != 0.0
                || l.frame_latency_coeff[lp][u] != 0.0
                || l.frame_energy_coeff[lp][u] != 0.0
            {
                out.push(format!("nonzero local transmission cost for user {u}"));
            }
        }
    }
    out
}
