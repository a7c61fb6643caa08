//! Slot-level simulator and schedulers for sharing physical resource blocks
//! between an eMBB slice and a closed-loop HRLLC slice.

pub mod agents;
pub mod channel;
pub mod cli;
pub mod config;
pub mod constraint;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod nn;
pub mod plot;
pub mod queueing;
pub mod rng;
pub mod schedulers;
pub mod sim;
pub mod traffic;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
