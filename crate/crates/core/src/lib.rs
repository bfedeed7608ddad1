//! Entry-threat event studies on airline route networks.
//!
//! The crate is organised as a batch pipeline:
//!
//! - [`ingest`] filters and merges itinerary (DB1B-schema) and segment
//!   (T-100-schema) files into route-carrier-quarter records.
//! - [`netgraph`] builds carrier route graphs and computes six global and
//!   six local network measures.
//! - [`threatscan`] classifies an entrant's presence on each route, detects
//!   threatened routes and assembles the event-time estimation panel.
//! - [`panelfit`] estimates two-way fixed-effects event-study regressions with
//!   robust and cluster-robust covariance.
//! - [`synthgen`] produces deterministic fixtures and synthetic data.
//! - [`report`] renders regression tables and figure data.
//! - [`pipeline`] wires the stages together for the command line.

pub mod error;
pub mod ingest;
pub mod netgraph;
pub mod panelfit;
pub mod pipeline;
pub mod quarter;
pub mod report;
pub mod route;
pub mod synthgen;
pub mod threatscan;

pub use error::{Error, Result};
pub use quarter::Quarter;
pub use route::Route;
