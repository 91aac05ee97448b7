//! Weighted coverage path planning.
//!
//! Plans reward-collecting trajectories for a double-integrator agent over a
//! spatial reward map. Key points taken from a Gaussian mixture are ordered by
//! an open travelling-salesman tour, and that tour warm-starts a
//! receding-horizon MPC whose coverage constraints keep the agent from
//! harvesting the same spot twice.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod gaussian;
pub mod geom;
pub mod gmm;
pub mod mpc;
pub mod render;
pub mod reward;
pub mod scalar;
pub mod sim;
pub mod tsp;
pub mod warmstart;

pub use error::{Error, Result, Stage};
pub use scalar::Real;

pub type Vec2 = geom::Vec2<f64>;
pub type GridMap = reward::GridMap<f64>;
pub type RewardField = reward::RewardField<f64>;
