//! Hand-built instances shared by unit tests.

use crate::instance::{GeoPoint, Instance, LinkCosts, MecSpec, SystemConstants, UserSpec, VirtualSpaceSpec};

/// One space (h = 100 Mc, D = 10 Mbit, E = 10 J) on two MECs 10 km apart:
/// MEC 0 at 2 GHz, MEC 1 at 4 GHz. User `u` is local to MEC `u % 2` and
/// requests the space with probability 1.
pub fn two_mec_instance(users: usize) -> Instance {
    let local: Vec<usize> = (0..users).map(|u| u % 2).collect();
    let far = |u: usize, m: usize, v: f64| if local[u] != m { v } else { 0.0 };
    let links = LinkCosts {
        sync_latency: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        sync_energy: vec![vec![0.0, 1.5], vec![1.5, 0.0]],
        sensor_latency: (0..users).map(|u| (0..2).map(|m| far(u, m, 1.0)).collect()).collect(),
        sensor_energy: (0..users).map(|u| (0..2).map(|m| far(u, m, 1.5)).collect()).collect(),
        frame_latency_coeff: (0..2).map(|m| (0..users).map(|u| far(u, m, 0.6)).collect()).collect(),
        frame_energy_coeff: (0..2).map(|m| (0..users).map(|u| far(u, m, 0.1)).collect()).collect(),
    };
    let mec = |frequency: f64, lat: f64| MecSpec {
        cache_capacity: 1000.0,
        frequency,
        max_tasks: 5,
        location: GeoPoint::new(lat, 20.0),
    };
    Instance {
        v: 1,
        id: "two".into(),
        constants: SystemConstants::default(),
        spaces: vec![VirtualSpaceSpec {
            cache_size: 100.0,
            maint_energy: 10.0,
            workload: 100.0,
            frame_size: 10.0,
        }],
        mecs: vec![mec(2.0, 10.0), mec(4.0, 10.09)],
        users: local
            .iter()
            .map(|&m| UserSpec {
                local_mec: m,
                edge_latency_coeff: 0.0,
                edge_energy_coeff: 0.0,
            })
            .collect(),
        p: vec![vec![1.0]; users],
        links,
    }
}
