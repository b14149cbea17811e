//! Concentration certificates for linear and switched linear dynamical
//! systems with Gaussian noise, plus Monte Carlo machinery to check them.

pub mod dynamics;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod montecarlo;
pub mod reward;
pub mod rng;
pub mod transport;

pub use error::{Error, Result};
pub use reward::Reward;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
