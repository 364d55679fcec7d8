//! Preference-conditioned graph denoiser trained as a consistency model.

pub mod checkpoint;
pub mod diffusion;
pub mod gradcheck;
pub mod graph;
pub mod net;
pub mod optim;
pub mod sampling;
pub mod train;
