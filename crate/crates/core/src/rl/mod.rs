//! Multi-objective PPO fine-tuning of the consistency denoiser.

pub mod buffer;
pub mod critic;
pub mod distill;
pub mod mocmpo;
pub mod policy;
pub mod ppo;

pub use buffer::{fill_buffer, rollout, ReplayBuffer, Rollout, Transition};
pub use critic::Critic;
pub use mocmpo::{mo_cmpo, policy_front, preference_sweep, IterationLog, MoCmpoOutput, MoCmpoResult};
pub use ppo::{ppo_update, PpoConfig, PpoReport};
