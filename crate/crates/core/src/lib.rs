//! Opportunistic spectrum access simulator.
//!
//! A secondary user ranks channels with a bandit policy, senses them in
//! order within each frame, and (for the proposed scheme) learns from a gamma
//! posterior over primary-user idle times how many following frames it can
//! transmit without sensing at all. Baselines are optimistic Thompson
//! sampling, ranked Thompson sampling (SBLA), stateless Q-learning and random
//! order.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod policies;
pub mod reporting;
pub mod sensing;
pub mod skipper;
pub mod traffic;

pub use engine::{
    run_experiment, run_simulation, ExperimentResult, FrameRecord, MetricsSeries, SimConfig,
    Simulation,
};
pub use error::{Error, Result};
pub use policies::PolicyId;
pub use traffic::TrafficModel;
