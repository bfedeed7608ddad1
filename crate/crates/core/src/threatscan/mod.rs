//! Entrant presence classification, threatened-route detection and the
//! event-time estimation panel.
//!
//! A route is *threatened* when the entrant first sits at one endpoint
//! (single presence), then at both without flying the route (dual presence,
//! from `t0`), and finally starts service (entry, at `te`). Only routes where
//! presence moves monotonically through these states, and where some
//! incumbent serves the route throughout the 25-quarter window around `t0`
//! and at `te`, are kept.

mod bins;
mod detect;
mod panel;
mod presence;

pub use bins::{event_bin, EventBin};
pub use detect::{
    detect_threats, qualify_routes, read_threat_events_csv, write_threat_events_csv, RejectReason,
    ThreatEvent, ThreatScan,
};
pub use panel::{
    build_panel, read_panel_csv, write_panel_csv, Outcome, PanelBuild, PanelObservation,
};
pub use presence::{presence_state, EntrantHistory, EntrantNetwork, PresenceState};
