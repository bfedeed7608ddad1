use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::RouteCarrierQuarter;
use crate::quarter::Quarter;
use crate::route::Route;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PresenceState {
    NoPresence,
    SinglePresence,
    DualPresence,
    Entered,
}

impl PresenceState {
    pub fn name(self) -> &'static str {
        match self {
            PresenceState::NoPresence => "no_presence",
            PresenceState::SinglePresence => "single_presence",
            PresenceState::DualPresence => "dual_presence",
            PresenceState::Entered => "entered",
        }
    }
}

/// The entrant's footprint in one quarter. Its airport set is the set of
/// endpoints of the routes it serves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntrantNetwork {
    pub airports: BTreeSet<String>,
    pub routes: BTreeSet<Route>,
}

impl EntrantNetwork {
    pub fn from_routes(routes: impl IntoIterator<Item = Route>) -> Self {
        let routes: BTreeSet<Route> = routes.into_iter().collect();
        let airports = routes
            .iter()
            .flat_map(|r| [r.first().to_string(), r.second().to_string()])
            .collect();
        EntrantNetwork { airports, routes }
    }
}

pub fn presence_state(network: &EntrantNetwork, route: &Route) -> PresenceState {
    if network.routes.contains(route) {
        return PresenceState::Entered;
    }
    let a = network.airports.contains(route.first());
    let b = network.airports.contains(route.second());
    match (a, b) {
        (true, true) => PresenceState::DualPresence,
        (true, false) | (false, true) => PresenceState::SinglePresence,
        (false, false) => PresenceState::NoPresence,
    }
}

/// Quarterly entrant networks over a sample period. Quarters inside the
/// sample with no entrant service have an empty network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntrantHistory {
    pub entrant: String,
    pub first: Quarter,
    pub last: Quarter,
    networks: BTreeMap<Quarter, EntrantNetwork>,
}

impl EntrantHistory {
    pub fn new(
        entrant: impl Into<String>,
        first: Quarter,
        last: Quarter,
        networks: BTreeMap<Quarter, EntrantNetwork>,
    ) -> Self {
        EntrantHistory {
            entrant: entrant.into(),
            first,
            last,
            networks: networks
                .into_iter()
                .filter(|(q, _)| (first..=last).contains(q))
                .collect(),
        }
    }

    /// Build the history from merged records; the sample spans the first to
    /// the last quarter present for any carrier.
    pub fn from_records(entrant: &str, records: &[RouteCarrierQuarter]) -> Option<Self> {
        let first = records.iter().map(|r| r.quarter).min()?;
        let last = records.iter().map(|r| r.quarter).max()?;
        let mut routes: BTreeMap<Quarter, Vec<Route>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.carrier == entrant) {
            routes.entry(r.quarter).or_default().push(r.route.clone());
        }
        let networks = routes
            .into_iter()
            .map(|(q, rs)| (q, EntrantNetwork::from_routes(rs)))
            .collect();
        Some(EntrantHistory::new(entrant, first, last, networks))
    }

    pub fn network(&self, quarter: Quarter) -> Option<&EntrantNetwork> {
        self.networks.get(&quarter)
    }

    pub fn state(&self, route: &Route, quarter: Quarter) -> PresenceState {
        match self.networks.get(&quarter) {
            Some(n) => presence_state(n, route),
            None => PresenceState::NoPresence,
        }
    }

    pub fn quarters(&self) -> impl Iterator<Item = Quarter> {
        self.first.range_to(self.last)
    }

    /// Every route the entrant serves in some quarter.
    pub fn served_routes(&self) -> BTreeSet<Route> {
        self.networks
            .values()
            .flat_map(|n| n.routes.iter().cloned())
            .collect()
    }
}
