//! Deterministic fixtures and synthetic data.
//!
//! Every generator here is a pure function of its parameters and a `u64`
//! seed. Randomness comes from ChaCha8 ([`rand_chacha::ChaCha8Rng`]), whose
//! output stream is specified independently of platform and crate version,
//! so a seed produces the same bytes everywhere.

mod fixtures;
mod panel;
mod world;

use std::collections::BTreeMap;

pub use fixtures::{boundary_fixture, BoundaryExpectation};
pub use panel::{brute_force_wls, gen_panel, PanelDgp, PanelTruth, PlantedInteraction, SyntheticPanel};
pub use world::{generate_world, PlantedThreat, RawFiles, WorldConfig};

use crate::netgraph::{build_graph, Graph};
use crate::quarter::Quarter;
use crate::route::Route;
use crate::threatscan::{EntrantHistory, EntrantNetwork};

/// The seeded generator used throughout.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Edge list of the six-node illustrative network.
pub fn illustrative_edges() -> Vec<(String, String)> {
    [(1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (3, 5), (4, 5), (4, 6)]
        .iter()
        .map(|(a, b): &(i32, i32)| (a.to_string(), b.to_string()))
        .collect()
}

pub fn illustrative_graph() -> Graph {
    build_graph(illustrative_edges()).expect("the illustrative network is connected")
}

fn q(s: &str) -> Quarter {
    s.parse().expect("valid quarter literal")
}

/// A named entrant history with the single route it is meant to test.
#[derive(Debug, Clone)]
pub struct PresenceScenario {
    pub name: &'static str,
    pub history: EntrantHistory,
    pub route: Route,
}

/// Build a history from `(from, to, routes)` spells, each inclusive.
fn history(first: Quarter, last: Quarter, spells: &[(Quarter, Quarter, &[(&str, &str)])]) -> EntrantHistory {
    let mut networks: BTreeMap<Quarter, Vec<Route>> = BTreeMap::new();
    for (from, to, routes) in spells {
        for quarter in from.range_to(*to) {
            networks
                .entry(quarter)
                .or_default()
                .extend(routes.iter().map(|(a, b)| Route::new(*a, *b)));
        }
    }
    let networks = networks
        .into_iter()
        .map(|(q, rs)| (q, EntrantNetwork::from_routes(rs)))
        .collect();
    EntrantHistory::new("WN", first, last, networks)
}

/// Southwest and Denver–Orange County: present at SNA from 1999 via
/// SNA–OAK, at both endpoints once it opens Denver–Chicago Midway in 2006Q1,
/// on the route itself from 2008Q4.
pub fn staged_entry_scenario() -> PresenceScenario {
    PresenceScenario {
        name: "staged_den_sna",
        route: Route::new("DEN", "SNA"),
        history: history(
            q("1997Q1"),
            q("2012Q4"),
            &[
                (q("1997Q1"), q("2012Q4"), &[("OAK", "LAS"), ("LAS", "MDW")]),
                (q("1999Q1"), q("2012Q4"), &[("SNA", "OAK")]),
                (q("2006Q1"), q("2012Q4"), &[("DEN", "MDW")]),
                (q("2008Q4"), q("2012Q4"), &[("DEN", "SNA")]),
            ],
        ),
    }
}

/// The entrant reaches the second endpoint by flying the route itself.
pub fn simultaneous_scenario() -> PresenceScenario {
    PresenceScenario {
        name: "simultaneous",
        route: Route::new("DEN", "SNA"),
        history: history(
            q("1997Q1"),
            q("2012Q4"),
            &[
                (q("1997Q1"), q("2012Q4"), &[("SNA", "OAK"), ("OAK", "LAS")]),
                (q("2006Q1"), q("2012Q4"), &[("DEN", "SNA")]),
            ],
        ),
    }
}

/// Dual presence lapses back to single presence before entry.
pub fn reverting_scenario() -> PresenceScenario {
    PresenceScenario {
        name: "reverting",
        route: Route::new("DEN", "SNA"),
        history: history(
            q("1997Q1"),
            q("2012Q4"),
            &[
                (q("1997Q1"), q("2012Q4"), &[("SNA", "OAK"), ("OAK", "LAS")]),
                (q("2006Q1"), q("2006Q4"), &[("DEN", "LAS")]),
                (q("2008Q4"), q("2012Q4"), &[("DEN", "SNA")]),
            ],
        ),
    }
}

/// Dual presence that never turns into entry before the sample ends.
pub fn no_entry_scenario() -> PresenceScenario {
    PresenceScenario {
        name: "no_entry",
        route: Route::new("DEN", "SNA"),
        history: history(
            q("1997Q1"),
            q("2012Q4"),
            &[
                (q("1997Q1"), q("2012Q4"), &[("SNA", "OAK"), ("OAK", "LAS")]),
                (q("2006Q1"), q("2012Q4"), &[("DEN", "LAS")]),
            ],
        ),
    }
}

pub fn presence_scenarios() -> Vec<PresenceScenario> {
    vec![
        staged_entry_scenario(),
        simultaneous_scenario(),
        reverting_scenario(),
        no_entry_scenario(),
    ]
}
