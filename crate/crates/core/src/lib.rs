//! Multi-objective service placement for multi-user VR on edge networks.
//!
//! The crate covers the whole pipeline: instance generation, the latency and
//! energy cost model, exact, heuristic and evolutionary solvers, a
//! preference-conditioned graph denoiser trained as a consistency model, and
//! multi-objective PPO fine-tuning with a Pareto archive.

pub mod costmodel;
pub mod error;
pub mod heuristics;
pub mod instance;
pub mod io;
pub mod moea;
pub mod neural;
pub mod oracle;
pub mod pareto;
pub mod preference;
pub mod rl;
pub mod cli;

#[cfg(test)]
mod fixtures;

pub use error::{Error, Result};
