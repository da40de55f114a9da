//! Building blocks for online inverse reinforcement learning between two
//! agents that share one unknown exogenous disturbance.
//!
//! The pipeline: a disturbance observer reconstructs the shared disturbance
//! from the first agent's known dynamics; finite-window integrals of the
//! second agent's trajectory feed a concurrent-learning estimator for its
//! unknown drift parameters; and a recursive least-squares scheme over
//! inverse Bellman residuals recovers the second agent's reward weights.
//!
//! Modules are layered bottom-up: [`sim`] integrates the coupled dynamics,
//! [`observer`] tracks the exogenous state, [`window`] accumulates the
//! integral data, [`stack`] manages bounded history stacks with
//! singular-value-maximizing replacement, [`params`] estimates drift
//! parameters, and [`irl`] estimates reward weights.

pub mod error;
pub mod irl;
pub mod observer;
pub mod params;
pub mod sim;
pub mod stack;
pub mod window;

pub use error::Error;
