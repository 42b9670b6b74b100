//! Heartbeat-based performance anomaly diagnosis for multithreaded programs.
//!
//! The pipeline: instrumented worker threads emit heartbeat records
//! ([`emitter`]), synthetic workloads generate labeled datasets ([`synth`]),
//! similarity search compares heart-rate series under dynamic time warping
//! with a cheap lower bound ([`similarity`]), summary features describe a
//! trace against a healthy reference ([`features`]), classifiers map traces to
//! anomaly labels ([`classify`]), and a long-running collector diagnoses live
//! streams ([`collectord`]).

pub mod classify;
pub mod cli;
pub mod collectord;
pub mod dataset;
pub mod emitter;
pub mod error;
pub mod features;
pub mod model;
pub mod record;
pub mod seed;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
