//! Skeptical-learning laboratory.
//!
//! An incremental Gaussian-process location learner that can contradict its
//! annotator, the four-week study protocol that drives it on a simulated
//! clock, a smartphone-sensor feature pipeline, a world/annotator simulator,
//! and the evaluation harness tying them together.

pub mod chol;
pub mod clock;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod features;
pub mod gp;
pub mod kernel;
pub mod logio;
pub mod metrics;
pub mod report;
pub mod scheduler;
pub mod sensors;
pub mod sim;
pub mod taxonomy;

pub use error::{Error, Result};
