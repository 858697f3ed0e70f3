//! Simulator and protocol library for RFID missing-tag identification.
//!
//! The crate models a reader interrogating a known tag inventory in which an
//! unknown subset of tags is absent. It provides:
//!
//! - [`cpt`]: the collision-partition tree protocol. Tags are arranged in a
//!   binary tree over short hashed pseudo-IDs; every leaf holds at most two
//!   tags, and one Manchester-coded response slot checks both of them.
//! - [`baselines`]: polling and framed-ALOHA comparison protocols (PCMTI,
//!   MMTI, SFMTI).
//! - [`stats`]: Student-t quantiles, the slot-count stopping rule, sampling
//!   budgets and reference complexity curves.
//! - [`harness`]: deterministic Monte-Carlo trials, parameter sweeps and CSV
//!   output.
//!
//! All randomness flows through the explicit [`hashing::Prng`] so that a run
//! is reproducible from its seed on any platform.

pub mod baselines;
pub mod channel;
pub mod cpt;
mod error;
pub mod harness;
pub mod hashing;
pub mod model;
pub mod selftest;
pub mod stats;

pub use error::{MtiError, Result};
pub use hashing::Prng;
pub use model::{
    accuracy_ratio, elapsed_seconds, make_ground_truth, AccuracyRequirement, CostLedger,
    GroundTruth, IdentificationResult, Inventory, TagId, TimingModel,
};
