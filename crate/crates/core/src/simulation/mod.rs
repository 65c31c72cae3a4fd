//! Data generation, replicated scenarios, and Monte Carlo verification.

pub mod sampling;
pub mod scenario;
pub mod verify;
pub mod warp;
