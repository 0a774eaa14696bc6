//! Deterministic federated learning simulator built around a Stackelberg
//! game between the server and its clients.
//!
//! The server leads by announcing a decay factor that scales both the
//! effective learning rate and each client's reward; clients respond with
//! the local epoch count that maximizes their utility. Selection prefers
//! clients whose last local model stayed close to the global one, and
//! aggregation scales updates by the decay factor. FedAvg, FedProx, and
//! q-FFL are implemented as baselines, and a verifier checks the empirical
//! optimality gap of a quadratic workload against its theoretical
//! convergence bound.
//!
//! Every run is a pure function of its seed: data synthesis, partitioning,
//! cost draws, client selection, and batch shuffling all derive their
//! randomness from per-purpose streams of one base seed.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod datasets;
pub mod error;
pub mod federation;
pub mod game;
pub mod learner;
pub mod rng;

pub use error::{Error, Result};
