//! Experiment runner for the two-agent disturbance-coupled learning study.
//!
//! [`config`] parses and validates the flat key-value scenario file,
//! [`scenario`] wires the concrete models (dynamics, reward, bases) with
//! analytically known ground truth, [`runner`] executes the full estimation
//! loop and logs every step, and [`acceptance`] scores a finished run
//! against the quantitative acceptance criteria.

pub mod acceptance;
pub mod config;
pub mod runner;
pub mod scenario;
