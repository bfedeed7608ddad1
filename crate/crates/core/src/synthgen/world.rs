use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{rng, Rng};
use crate::error::{Error, Result};
use crate::pipeline::InputPaths;
use crate::quarter::Quarter;
use crate::route::Route;
use crate::threatscan::{event_bin, EventBin};

/// Airports of the synthetic world: code, state, latitude, longitude.
const AIRPORTS: [(&str, &str, f64, f64); 18] = [
    ("ATL", "GA", 33.64, -84.43),
    ("BOS", "MA", 42.36, -71.01),
    ("BWI", "MD", 39.18, -76.67),
    ("DEN", "CO", 39.86, -104.67),
    ("DFW", "TX", 32.90, -97.04),
    ("DTW", "MI", 42.21, -83.35),
    ("IAH", "TX", 29.98, -95.34),
    ("LAS", "NV", 36.08, -115.15),
    ("LAX", "CA", 33.94, -118.41),
    ("MDW", "IL", 41.79, -87.75),
    ("MIA", "FL", 25.79, -80.29),
    ("MSP", "MN", 44.88, -93.22),
    ("OAK", "CA", 37.72, -122.22),
    ("ORD", "IL", 41.98, -87.90),
    ("PHX", "AZ", 33.43, -112.01),
    ("SEA", "WA", 47.45, -122.31),
    ("SFO", "CA", 37.62, -122.38),
    ("SNA", "CA", 33.68, -117.87),
];

const STATE_JANUARY_F: [(&str, f64); 13] = [
    ("AZ", 54.0),
    ("CA", 50.0),
    ("CO", 25.0),
    ("FL", 68.0),
    ("GA", 44.0),
    ("IL", 24.0),
    ("MA", 29.0),
    ("MD", 33.0),
    ("MI", 23.0),
    ("MN", 12.0),
    ("NV", 45.0),
    ("TX", 46.0),
    ("WA", 40.0),
];

const ENTRANT: &str = "WN";

/// Quarter offsets (from the first sample quarter) of the entrant's moves.
struct Expansion {
    opened: &'static [(&'static str, &'static str, i64, i64)],
    entries: &'static [(&'static str, &'static str, i64)],
}

/// Routes flown from `start` to `end` (offsets, inclusive) that bring the
/// entrant to new airports, then entries onto incumbent routes.
const EXPANSION: Expansion = Expansion {
    opened: &[
        ("DEN", "LAS", 12, i64::MAX),
        ("DEN", "MDW", 12, i64::MAX),
        ("ATL", "OAK", 16, i64::MAX),
        ("SEA", "OAK", 20, 25),
        ("SEA", "OAK", 30, i64::MAX),
        ("BOS", "BWI", 40, i64::MAX),
    ],
    entries: &[
        ("DEN", "BWI", 15),
        ("DEN", "PHX", 17),
        ("DEN", "SNA", 23),
        ("ATL", "PHX", 18),
        ("ATL", "BWI", 21),
        ("ATL", "MDW", 24),
        ("SEA", "LAS", 32),
    ],
};

const ENTRANT_BASE: [(&str, &str); 12] = [
    ("LAS", "PHX"),
    ("LAS", "OAK"),
    ("LAS", "MDW"),
    ("LAS", "BWI"),
    ("PHX", "OAK"),
    ("PHX", "MDW"),
    ("PHX", "BWI"),
    ("OAK", "MDW"),
    ("MDW", "BWI"),
    ("LAS", "SNA"),
    ("PHX", "SNA"),
    ("OAK", "SNA"),
];

/// Incumbent hubs and spokes.
const INCUMBENTS: [(&str, &str, &[&str]); 3] = [
    ("AA", "DFW", &["ATL", "BOS", "BWI", "DEN", "LAS", "LAX", "MIA", "ORD", "PHX", "SEA", "SFO"]),
    ("DL", "ATL", &["BOS", "BWI", "DEN", "DTW", "LAS", "LAX", "MDW", "MIA", "ORD", "PHX", "SEA"]),
    ("UA", "DEN", &["BOS", "BWI", "DTW", "LAS", "LAX", "MSP", "ORD", "PHX", "SEA", "SFO", "SNA"]),
];

/// Incumbent service gaps: carrier, route endpoints, quarter offset.
const GAPS: [(&str, &str, &str, i64); 2] = [("UA", "DEN", "BWI", 26), ("DL", "ATL", "MDW", 14)];

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub seed: u64,
    pub first_quarter: Quarter,
    pub quarters: usize,
    /// Clean itineraries per directed carrier-route-quarter.
    pub itineraries: usize,
    /// Probability that a directed carrier-route-quarter also carries one
    /// defective itinerary aimed at a specific filter.
    pub defect_rate: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 7,
            first_quarter: Quarter::new(2000, 1).expect("valid quarter"),
            quarters: 48,
            itineraries: 12,
            defect_rate: 0.03,
        }
    }
}

/// A threat planted in the world that the pipeline should recover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedThreat {
    pub route: Route,
    pub t0: Quarter,
    pub te: Quarter,
    pub incumbents: BTreeSet<String>,
}

/// Raw input files in the ingest schemas, plus what was planted.
#[derive(Debug, Clone)]
pub struct RawFiles {
    pub coupon: String,
    pub ticket: String,
    pub t100: String,
    pub cpi: String,
    pub temperature: String,
    pub airports: String,
    pub entrant: String,
    pub base_quarter: Quarter,
    /// Threats that satisfy every qualification rule.
    pub threats: Vec<PlantedThreat>,
}

impl RawFiles {
    /// Write the six files into `dir` under their conventional names.
    pub fn write(&self, dir: &Path) -> Result<InputPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = InputPaths::in_dir(dir);
        for (path, body) in [
            (&paths.coupon, &self.coupon),
            (&paths.ticket, &self.ticket),
            (&paths.t100, &self.t100),
            (&paths.cpi, &self.cpi),
            (&paths.temperature, &self.temperature),
            (&paths.airports, &self.airports),
        ] {
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        Ok(paths)
    }
}

pub(super) fn haversine_miles(a: &str, b: &str) -> f64 {
    let find = |c: &str| AIRPORTS.iter().find(|x| x.0 == c).expect("known airport");
    let (_, _, la1, lo1) = find(a);
    let (_, _, la2, lo2) = find(b);
    let (p1, p2) = (la1.to_radians(), la2.to_radians());
    let dp = p2 - p1;
    let dl = (lo2 - lo1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    (2.0 * 3958.8 * h.sqrt().asin()).round()
}

pub(super) fn state(code: &str) -> &'static str {
    AIRPORTS.iter().find(|x| x.0 == code).expect("known airport").1
}

fn cpi_value(month_offset: i64) -> f64 {
    (170.0 * 1.0022f64.powi(month_offset as i32) * 1000.0).round() / 1000.0
}

/// Routes served by each carrier at quarter offset `k`.
fn schedule(k: i64) -> BTreeMap<&'static str, BTreeSet<Route>> {
    let mut out: BTreeMap<&str, BTreeSet<Route>> = BTreeMap::new();
    for (carrier, hub, spokes) in INCUMBENTS {
        let routes = out.entry(carrier).or_default();
        for s in spokes {
            routes.insert(Route::new(hub, *s));
        }
        if carrier == "AA" {
            routes.insert(Route::new("DEN", "SNA"));
        }
    }
    for (carrier, a, b, at) in GAPS {
        if at == k {
            out.get_mut(carrier).expect("incumbent").remove(&Route::new(a, b));
        }
    }
    let wn = out.entry(ENTRANT).or_default();
    wn.extend(ENTRANT_BASE.iter().map(|(a, b)| Route::new(*a, *b)));
    for &(a, b, from, to) in EXPANSION.opened {
        if (from..=to).contains(&k) {
            wn.insert(Route::new(a, b));
        }
    }
    for &(a, b, from) in EXPANSION.entries {
        if k >= from {
            wn.insert(Route::new(a, b));
        }
    }
    out
}

/// Threat timing per route as `(t0, te)` offsets. `t0` is when the entrant
/// first reaches the second endpoint.
fn threat_offsets() -> BTreeMap<Route, (i64, i64)> {
    let opened_at = |airport: &str| {
        EXPANSION
            .opened
            .iter()
            .filter(|o| o.0 == airport)
            .map(|o| o.2)
            .min()
            .expect("opened airport")
    };
    EXPANSION
        .entries
        .iter()
        .map(|&(a, b, te)| (Route::new(a, b), (opened_at(a), te)))
        .collect()
}

fn fare_effect(bin: EventBin) -> f64 {
    match bin {
        EventBin::Baseline | EventBin::Pre(_) => 0.0,
        EventBin::Dual(k) => -0.03 - 0.01 * k as f64,
        EventBin::DualLate => -0.05,
        EventBin::Entry => -0.15,
        EventBin::EntryEarly => -0.18,
        EventBin::EntryLate => -0.20,
    }
}

fn volume_effect(bin: EventBin) -> f64 {
    if bin.is_dual() {
        0.20
    } else if bin.is_entry() {
        0.30
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
enum Defect {
    ThreeSegments,
    Codeshare,
    ClassMismatch,
    PassengerMismatch,
    NonContinental,
    ForeignCarrier,
    FrequentFlyer,
    BulkFare,
    IncredibleFare,
    MissingTicket,
    MalformedCoupon,
    MalformedTicket,
}

const DEFECTS: [Defect; 12] = [
    Defect::ThreeSegments,
    Defect::Codeshare,
    Defect::ClassMismatch,
    Defect::PassengerMismatch,
    Defect::NonContinental,
    Defect::ForeignCarrier,
    Defect::FrequentFlyer,
    Defect::BulkFare,
    Defect::IncredibleFare,
    Defect::MissingTicket,
    Defect::MalformedCoupon,
    Defect::MalformedTicket,
];

struct Writer {
    coupon: String,
    ticket: String,
    next_id: u64,
}

struct Itin<'a> {
    carrier: &'a str,
    origin: &'a str,
    dest: &'a str,
    class: &'a str,
    passengers: u32,
    distance: f64,
    fare: f64,
    quarter: Quarter,
}

impl Writer {
    fn id(&mut self, q: Quarter) -> String {
        self.next_id += 1;
        format!("{}{}{:07}", q.year(), q.q(), self.next_id)
    }

    fn clean(&mut self, it: &Itin) {
        let id = self.id(it.quarter);
        self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
        self.ticket_row(&id, it.fare, 0, 2.0 * it.distance, it.quarter, it.passengers);
    }

    fn coupons(&mut self, id: &str, it: &Itin, tk: &str, return_class: &str, return_pax: u32, far_state: &str) {
        let (y, q) = (it.quarter.year(), it.quarter.q());
        let (o, d, os) = (it.origin, it.dest, state(it.origin));
        let _ = writeln!(
            self.coupon,
            "{id},1,{o},{d},{},{tk},{},{},{},{os},{far_state},{y},{q}",
            it.carrier, it.class, it.passengers, it.distance
        );
        let _ = writeln!(
            self.coupon,
            "{id},2,{d},{o},{},{tk},{return_class},{return_pax},{},{far_state},{os},{y},{q}",
            it.carrier, it.distance
        );
    }

    fn ticket_row(&mut self, id: &str, fare: f64, bulk: u8, distance_full: f64, q: Quarter, pax: u32) {
        let _ = writeln!(
            self.ticket,
            "{id},{fare:.2},{bulk},{distance_full},{},{},{pax}",
            q.year(),
            q.q()
        );
    }

    fn defective(&mut self, it: &Itin, defect: Defect) {
        let id = self.id(it.quarter);
        let (y, q) = (it.quarter.year(), it.quarter.q());
        let rt = 2.0 * it.distance;
        match defect {
            Defect::ThreeSegments => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
                let _ = writeln!(
                    self.coupon,
                    "{id},3,{},{},{},{},{},{},{},{},{},{y},{q}",
                    it.origin,
                    it.dest,
                    it.carrier,
                    it.carrier,
                    it.class,
                    it.passengers,
                    it.distance,
                    state(it.origin),
                    state(it.dest)
                );
                self.ticket_row(&id, it.fare, 0, 3.0 * it.distance, it.quarter, it.passengers);
            }
            Defect::Codeshare => {
                let tk = if it.carrier == "DL" { "AA" } else { "DL" };
                self.coupons(&id, it, tk, it.class, it.passengers, state(it.dest));
                self.ticket_row(&id, it.fare, 0, rt, it.quarter, it.passengers);
            }
            Defect::ClassMismatch => {
                self.coupons(&id, it, it.carrier, "F", it.passengers, state(it.dest));
                self.ticket_row(&id, it.fare, 0, rt, it.quarter, it.passengers);
            }
            Defect::PassengerMismatch => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers + 1, state(it.dest));
                self.ticket_row(&id, it.fare, 0, rt, it.quarter, it.passengers);
            }
            Defect::NonContinental => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, "AK");
                self.ticket_row(&id, it.fare, 0, rt, it.quarter, it.passengers);
            }
            Defect::ForeignCarrier => {
                let foreign = Itin { carrier: "BA", ..*it };
                self.coupons(&id, &foreign, "BA", it.class, it.passengers, state(it.dest));
                self.ticket_row(&id, it.fare, 0, rt, it.quarter, it.passengers);
            }
            Defect::FrequentFlyer => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
                self.ticket_row(&id, 5.0, 0, rt, it.quarter, it.passengers);
            }
            Defect::BulkFare => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
                self.ticket_row(&id, it.fare, 1, rt, it.quarter, it.passengers);
            }
            Defect::IncredibleFare => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
                self.ticket_row(&id, rt + 50.0, 0, rt, it.quarter, it.passengers);
            }
            Defect::MissingTicket => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
            }
            Defect::MalformedCoupon => {
                let _ = writeln!(
                    self.coupon,
                    "{id},1,{},{},{},{},{},many,{},{},{},{y},{q}",
                    it.origin,
                    it.dest,
                    it.carrier,
                    it.carrier,
                    it.class,
                    it.distance,
                    state(it.origin),
                    state(it.dest)
                );
            }
            Defect::MalformedTicket => {
                self.coupons(&id, it, it.carrier, it.class, it.passengers, state(it.dest));
                let _ = writeln!(self.ticket, "{id},-{:.2},0,{rt},{y},{q},{}", it.fare, it.passengers);
            }
        }
    }
}

/// Generate a small airline world: three hub carriers and an expanding
/// entrant whose moves create dual presence and entry on five incumbent
/// routes that qualify, one that loses incumbent coverage, one that reverts
/// and several where presence and entry coincide.
pub fn generate_world(cfg: &WorldConfig) -> Result<RawFiles> {
    if cfg.quarters < 37 {
        return Err(Error::InvalidDgp(
            "the world needs at least 37 quarters for its planted windows".into(),
        ));
    }
    if cfg.itineraries < 10 {
        return Err(Error::InvalidDgp(
            "at least 10 itineraries per direction keep every route above 100 passengers".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.defect_rate) {
        return Err(Error::InvalidDgp("defect_rate must lie in [0, 1]".into()));
    }
    let mut rng: Rng = rng(cfg.seed);
    let q0 = cfg.first_quarter;
    let last = q0 + (cfg.quarters as i64 - 1);
    let month0 = (q0.year() as i64) * 12 + (q0.last_month() as i64 - 3);
    let cpi_at = |q: Quarter| cpi_value(q.year() as i64 * 12 + q.last_month() as i64 - 1 - month0);
    let base_cpi = cpi_at(last);
    let threats = threat_offsets();
    let carrier_premium: BTreeMap<&str, f64> =
        [("AA", 0.06), ("DL", 0.03), ("UA", 0.08), (ENTRANT, -0.25)].into_iter().collect();

    let mut route_size: BTreeMap<Route, f64> = BTreeMap::new();
    let mut w = Writer {
        coupon: "ITIN_ID,SEQ_NUM,ORIGIN,DEST,OP_CARRIER,TK_CARRIER,FARE_CLASS,PASSENGERS,DISTANCE,ORIGIN_STATE,DEST_STATE,YEAR,QUARTER\n".into(),
        ticket: "ITIN_ID,ITIN_FARE,BULK_FARE_UNRELIABLE,DISTANCE_FULL,YEAR,QUARTER,PASSENGERS\n".into(),
        next_id: 0,
    };
    let mut t100 =
        String::from("CARRIER,ORIGIN,DEST,YEAR,MONTH,PASSENGERS,SEATS,SERVICE_CLASS,AIRCRAFT_CONFIG\n");
    let level_noise = Normal::new(0.0, 0.03).expect("positive sd");
    let fare_noise = Normal::new(0.0, 0.2).expect("positive sd");

    for k in 0..cfg.quarters as i64 {
        let quarter = q0 + k;
        let inflation = cpi_at(quarter) / base_cpi;
        for (carrier, routes) in schedule(k) {
            for route in routes {
                let size = *route_size
                    .entry(route.clone())
                    .or_insert_with(|| rng.random_range(0.8..1.5));
                let bin = match threats.get(&route) {
                    Some(&(t0, te)) if carrier != ENTRANT => {
                        let (t0, te) = (q0 + t0, q0 + te);
                        Some(event_bin(quarter, t0, te).unwrap_or(if quarter > te {
                            EventBin::EntryLate
                        } else {
                            EventBin::Baseline
                        }))
                    }
                    _ => None,
                };
                let fx = bin.map_or(0.0, fare_effect);
                let vx = bin.map_or(0.0, volume_effect);
                let distance = haversine_miles(route.first(), route.second());
                let real = (0.3 * 2.0 * distance + 40.0).ln() + carrier_premium[carrier];
                let level = real + fx + level_noise.sample(&mut rng) + inflation.ln();
                for (origin, dest) in [(route.first(), route.second()), (route.second(), route.first())] {
                    for _ in 0..cfg.itineraries {
                        let fare = ((level + fare_noise.sample(&mut rng)).exp() * 100.0).round() / 100.0;
                        let class = match rng.random_range(0..40) {
                            0 => "F",
                            1..=19 => "X",
                            _ => "Y",
                        };
                        w.clean(&Itin {
                            carrier,
                            origin,
                            dest,
                            class,
                            passengers: rng.random_range(10..=16),
                            distance,
                            fare,
                            quarter,
                        });
                    }
                    if rng.random_bool(cfg.defect_rate) {
                        let defect = DEFECTS[rng.random_range(0..DEFECTS.len())];
                        let fare = level.exp().round();
                        let it = Itin {
                            carrier,
                            origin,
                            dest,
                            class: "Y",
                            passengers: rng.random_range(1..=4),
                            distance,
                            fare,
                            quarter,
                        };
                        w.defective(&it, defect);
                    }
                    let pax = (3000.0 * size * (vx + level_noise.sample(&mut rng)).exp()).round() as u64;
                    let load = rng.random_range(0.72..0.86);
                    let seats = (pax as f64 / load).round() as u64;
                    let (year, m3) = (quarter.year(), quarter.last_month());
                    let (p1, s1) = (pax / 3, seats / 3);
                    for (month, p, s) in [(m3 - 2, p1, s1), (m3 - 1, p1, s1), (m3, pax - 2 * p1, seats - 2 * s1)] {
                        let _ = writeln!(t100, "{carrier},{origin},{dest},{year},{month},{p},{s},F,1");
                    }
                    if rng.random_bool(cfg.defect_rate) {
                        let _ = writeln!(t100, "{carrier},{origin},{dest},{year},{m3},0,0,G,2");
                        let _ = writeln!(t100, "{carrier},{origin},{dest},{year},{m3},150,180,L,1");
                    }
                }
            }
        }
    }

    let mut cpi = String::from("YEAR,MONTH,INDEX\n");
    for year in q0.year()..=last.year() {
        for month in 1..=12 {
            let offset = year as i64 * 12 + month as i64 - 1 - month0;
            let _ = writeln!(cpi, "{year},{month},{}", cpi_value(offset));
        }
    }
    let mut temperature = String::from("STATE,YEAR,JAN_AVG_F\n");
    for (st, base) in STATE_JANUARY_F {
        for year in q0.year()..=last.year() {
            let t = base + rng.random_range(-4.0..4.0);
            let _ = writeln!(temperature, "{st},{year},{t:.1}");
        }
    }
    let mut airports = String::from("AIRPORT,STATE\n");
    for (code, st, _, _) in AIRPORTS {
        let _ = writeln!(airports, "{code},{st}");
    }

    let disqualified: BTreeSet<Route> = GAPS
        .iter()
        .filter_map(|&(_, a, b, at)| {
            let route = Route::new(a, b);
            let (t0, _) = threats.get(&route)?;
            ((at - t0).abs() <= 12).then_some(route)
        })
        .collect();
    let planted = threats
        .iter()
        .filter(|(route, _)| !disqualified.contains(*route))
        .filter_map(|(route, &(t0, te))| {
            let incumbents: BTreeSet<String> = INCUMBENTS
                .iter()
                .filter(|(c, hub, spokes)| {
                    (route.contains(hub) && spokes.iter().any(|s| route.contains(s)))
                        || (*c == "AA" && *route == Route::new("DEN", "SNA"))
                })
                .map(|(c, _, _)| c.to_string())
                .collect();
            (!incumbents.is_empty()).then(|| PlantedThreat {
                route: route.clone(),
                t0: q0 + t0,
                te: q0 + te,
                incumbents,
            })
        })
        .collect();

    Ok(RawFiles {
        coupon: w.coupon,
        ticket: w.ticket,
        t100,
        cpi,
        temperature,
        airports,
        entrant: ENTRANT.to_string(),
        base_quarter: last,
        threats: planted,
    })
}
