//! Discrete-time simulator of peer-to-peer energy trading in local energy
//! communities.
//!
//! The building blocks, bottom up:
//!
//! - [`profiles`]: time series, tariffs, and prosumer asset specifications.
//! - [`battery`]: greedy self-consumption dispatch, cycle counting, and
//!   depreciation.
//! - [`billing`]: individual and coalition bills, Gains from Trade.
//! - [`optimiser`]: the joint profile optimiser that aggregates coalitions,
//!   values pairwise trades, derives per-step trade schedules, and sizes
//!   assets.
//! - [`grid`]: pluggable feeder-constraint validation for candidate trades.
//! - [`market`]: the two trading mechanisms — centralised GT-sorted clearing
//!   and decentralised top-k negotiation.
//! - [`data`]: profile ingestion, archetype synthesis, clustering, and
//!   diversity-factor tooling.
//! - [`scenario`] and [`experiments`]: configuration and the experiment
//!   drivers behind the command-line interface.

pub mod battery;
pub mod billing;
pub mod error;
pub mod optimiser;
pub mod profiles;

pub use error::{Error, Result};
