//! Simulator and schedulers for running many distributed jobs at once on a
//! congested clique.

pub mod collectives;
pub mod config;
pub mod error;
pub mod jobs;
pub mod metrics;
pub mod report;
pub mod sched;
pub mod sim;

pub use error::{Error, Result};
