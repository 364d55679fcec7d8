//! JSON checkpoints: architecture, noise schedule, flat parameters and
//! optional critic heads.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::neural::diffusion::NoiseSchedule;
use crate::neural::net::{DenoiserParams, NetConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Flat weights of a small value head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticSnapshot {
    pub input: usize,
    pub hidden: usize,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub v: u32,
    pub config: NetConfig,
    pub schedule: NoiseSchedule,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub critics: Vec<CriticSnapshot>,
    /// Free-form run description (preset, seed, iteration).
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl Checkpoint {
    pub fn new(params: &DenoiserParams, schedule: &NoiseSchedule) -> Self {
        Checkpoint {
            v: CHECKPOINT_VERSION,
            config: params.cfg,
            schedule: schedule.clone(),
            params: params.data.clone(),
            critics: Vec::new(),
            meta: serde_json::Value::Null,
        }
    }

    pub fn denoiser(&self) -> Result<DenoiserParams> {
        DenoiserParams::from_flat(self.config, self.params.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = read_json(path)?;
        if ck.v != CHECKPOINT_VERSION {
            return Err(Error::Schema {
                found: ck.v,
                expected: CHECKPOINT_VERSION,
            });
        }
        ck.denoiser()?;
        Ok(ck)
    }
}
