//! Deterministic simulation lab for multi-license spectrum auctions.
//!
//! Five mechanisms (first-price and second-price sealed bid, sequential and
//! simultaneous ascending auctions, and the hybrid with saturation-factor
//! closing) run over scenarios of licenses, bidders and bundle valuations,
//! driven by a library of bidder strategies. Outcomes are scored against a
//! brute-force welfare oracle.

pub mod cli;
pub mod error;
pub mod mechanisms;
pub mod metrics;
pub mod model;
pub mod scenarios;
pub mod strategies;

pub use error::{Error, Result};
pub use mechanisms::{run, run_agents, run_with, MechanismConfig};
pub use model::{AuctionOutcome, BidderId, LicenseId, MechanismKind, Money};
pub use scenarios::{build_scenario, Scenario};
