use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use super::{EntrantHistory, PresenceState};
use crate::error::{Error, Result};
use crate::ingest::RouteCarrierQuarter;
use crate::quarter::Quarter;
use crate::route::Route;

/// Half-width of the incumbent coverage window around `t0`.
pub const WINDOW: i64 = 12;

/// A threatened route: single presence from `t_s`, dual presence from `t0`,
/// entry at `te`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreatEvent {
    pub entrant: String,
    pub route: Route,
    pub t_s: Quarter,
    pub t0: Quarter,
    pub te: Quarter,
    pub incumbents: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    /// Served by the entrant in the first sample quarter.
    AlreadyServed,
    /// Dual presence and entry start in the same quarter.
    Simultaneous,
    /// Dual presence not preceded by single presence.
    NoSinglePresence,
    /// Dual presence reverts before entry.
    NonMonotone,
    /// Dual presence lasts to the end of the sample.
    NoEntry,
    /// No incumbent serves some quarter of the window or `te`.
    NoIncumbentCoverage,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::AlreadyServed => "already_served",
            RejectReason::Simultaneous => "simultaneous_dual_and_entry",
            RejectReason::NoSinglePresence => "no_single_presence",
            RejectReason::NonMonotone => "non_monotone",
            RejectReason::NoEntry => "no_entry",
            RejectReason::NoIncumbentCoverage => "no_incumbent_coverage",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThreatScan {
    pub events: Vec<ThreatEvent>,
    pub rejects: BTreeMap<RejectReason, usize>,
}

impl ThreatScan {
    fn reject(&mut self, reason: RejectReason) {
        *self.rejects.entry(reason).or_default() += 1;
    }

    pub fn rejected(&self, reason: RejectReason) -> usize {
        self.rejects.get(&reason).copied().unwrap_or(0)
    }
}

fn scan_route(history: &EntrantHistory, route: &Route) -> Result<(Quarter, Quarter, Quarter), RejectReason> {
    use PresenceState::*;
    let state = |q| history.state(route, q);
    let Some(t0) = history
        .quarters()
        .find(|&q| matches!(state(q), DualPresence | Entered))
    else {
        return Err(RejectReason::NoEntry);
    };
    if state(t0) == Entered {
        return Err(if t0 == history.first {
            RejectReason::AlreadyServed
        } else {
            RejectReason::Simultaneous
        });
    }
    if t0 == history.first || state(t0 - 1) != SinglePresence {
        return Err(RejectReason::NoSinglePresence);
    }
    let mut t_s = t0 - 1;
    while t_s > history.first && state(t_s - 1) == SinglePresence {
        t_s = t_s - 1;
    }
    for t in (t0 + 1).range_to(history.last) {
        match state(t) {
            DualPresence => continue,
            Entered => return Ok((t_s, t0, t)),
            _ => return Err(RejectReason::NonMonotone),
        }
    }
    Err(RejectReason::NoEntry)
}

/// Scan every route the entrant ever serves for its first
/// single → dual → entry series. Rejected routes are counted by reason.
pub fn detect_threats(history: &EntrantHistory) -> ThreatScan {
    let mut scan = ThreatScan::default();
    for route in history.served_routes() {
        match scan_route(history, &route) {
            Ok((t_s, t0, te)) => scan.events.push(ThreatEvent {
                entrant: history.entrant.clone(),
                route,
                t_s,
                t0,
                te,
                incumbents: BTreeSet::new(),
            }),
            Err(reason) => scan.reject(reason),
        }
    }
    scan
}

/// Keep events where the union of non-entrant carriers on the route covers
/// every quarter of `t0-12 ..= t0+12` and `te`, attaching those carriers as
/// the qualified incumbents.
pub fn qualify_routes(raw: ThreatScan, records: &[RouteCarrierQuarter]) -> ThreatScan {
    let mut service: BTreeMap<(&Route, Quarter), BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        service
            .entry((&r.route, r.quarter))
            .or_default()
            .insert(r.carrier.as_str());
    }
    let mut out = ThreatScan {
        events: Vec::new(),
        rejects: raw.rejects,
    };
    for mut ev in raw.events {
        let carriers_at = |q: Quarter| -> BTreeSet<&str> {
            service
                .get(&(&ev.route, q))
                .map(|s| s.iter().copied().filter(|c| *c != ev.entrant).collect())
                .unwrap_or_default()
        };
        let window: Vec<Quarter> = (ev.t0 - WINDOW).range_to(ev.t0 + WINDOW).collect();
        let covered = window
            .iter()
            .chain([&ev.te])
            .all(|&q| !carriers_at(q).is_empty());
        if !covered {
            out.reject(RejectReason::NoIncumbentCoverage);
            continue;
        }
        ev.incumbents = window
            .iter()
            .flat_map(|&q| carriers_at(q))
            .map(str::to_string)
            .collect();
        out.events.push(ev);
    }
    out
}

const EVENT_COLUMNS: [&str; 7] = ["ENTRANT", "ORIGIN", "DEST", "TS", "T0", "TE", "N_INCUMBENTS"];

/// Writes events plus an `INCUMBENTS` column (semicolon separated) so the
/// file can be read back.
pub fn write_threat_events_csv<W: Write>(events: &[ThreatEvent], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = EVENT_COLUMNS.to_vec();
    header.push("INCUMBENTS");
    wr.write_record(&header)?;
    for e in events {
        wr.write_record([
            e.entrant.clone(),
            e.route.first().to_string(),
            e.route.second().to_string(),
            e.t_s.to_string(),
            e.t0.to_string(),
            e.te.to_string(),
            e.incumbents.len().to_string(),
            e.incumbents.iter().cloned().collect::<Vec<_>>().join(";"),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("<threat events csv>", e))
}

pub fn read_threat_events_csv<R: Read>(reader: R) -> Result<Vec<ThreatEvent>> {
    let mut table = crate::ingest::Table::new("threat events", reader, &EVENT_COLUMNS, &["INCUMBENTS"])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(format!("threat events {e}")))?;
        let quarter = |i: usize| row.get(i).parse::<Quarter>();
        let incumbents: BTreeSet<String> = row
            .optional(0)
            .unwrap_or("")
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        out.push(ThreatEvent {
            entrant: row.get(0).to_string(),
            route: Route::new(row.get(1), row.get(2)),
            t_s: quarter(3)?,
            t0: quarter(4)?,
            te: quarter(5)?,
            incumbents,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threatscan::EntrantNetwork;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    /// Entrant timeline for one route `A-B` plus filler routes that place it
    /// at one or both endpoints. `states` runs from 2000Q1.
    fn history(states: &[PresenceState]) -> EntrantHistory {
        let start = q("2000Q1");
        let mut nets = BTreeMap::new();
        for (i, s) in states.iter().enumerate() {
            let routes: Vec<Route> = match s {
                PresenceState::NoPresence => vec![Route::new("X", "Y")],
                PresenceState::SinglePresence => vec![Route::new("A", "X")],
                PresenceState::DualPresence => vec![Route::new("A", "X"), Route::new("B", "X")],
                PresenceState::Entered => vec![Route::new("A", "B")],
            };
            nets.insert(start + i as i64, EntrantNetwork::from_routes(routes));
        }
        EntrantHistory::new("WN", start, start + (states.len() as i64 - 1), nets)
    }

    use PresenceState::*;

    #[test]
    fn single_dual_entry_is_detected() {
        let h = history(&[NoPresence, SinglePresence, SinglePresence, DualPresence, DualPresence, Entered]);
        let scan = detect_threats(&h);
        let ev = scan.events.iter().find(|e| e.route == Route::new("A", "B")).unwrap();
        assert_eq!((ev.t_s, ev.t0, ev.te), (q("2000Q2"), q("2000Q4"), q("2001Q2")));
    }

    #[test]
    fn rejections_are_counted_by_reason() {
        let ab = |h: &EntrantHistory| scan_route(h, &Route::new("A", "B"));
        assert_eq!(ab(&history(&[SinglePresence, Entered])), Err(RejectReason::Simultaneous));
        assert_eq!(ab(&history(&[Entered, Entered])), Err(RejectReason::AlreadyServed));
        assert_eq!(ab(&history(&[NoPresence, DualPresence, Entered])), Err(RejectReason::NoSinglePresence));
        assert_eq!(
            ab(&history(&[SinglePresence, DualPresence, SinglePresence, Entered])),
            Err(RejectReason::NonMonotone)
        );
        assert_eq!(ab(&history(&[SinglePresence, DualPresence, DualPresence])), Err(RejectReason::NoEntry));
    }

    #[test]
    fn only_the_first_series_counts() {
        let h = history(&[SinglePresence, Entered, SinglePresence, DualPresence, Entered]);
        assert_eq!(scan_route(&h, &Route::new("A", "B")), Err(RejectReason::Simultaneous));
    }

    fn rcq(carrier: &str, route: &Route, quarter: Quarter) -> RouteCarrierQuarter {
        use crate::ingest::FareSummary;
        RouteCarrierQuarter {
            carrier: carrier.into(),
            route: route.clone(),
            quarter,
            db1b_passengers: 100,
            fares_real: FareSummary { mean: 200.0, p10: 100.0, p25: 150.0, p75: 250.0, p90: 300.0 },
            t100_passengers: 3000,
            t100_seats: 4000,
            load_factor: 0.75,
            distance_miles: 800.0,
            temp_differential_f: None,
        }
    }

    fn raw_event(route: &Route, t0: Quarter, te: Quarter) -> ThreatScan {
        ThreatScan {
            events: vec![ThreatEvent {
                entrant: "WN".into(),
                route: route.clone(),
                t_s: t0 - 1,
                t0,
                te,
                incumbents: BTreeSet::new(),
            }],
            rejects: BTreeMap::new(),
        }
    }

    #[test]
    fn coverage_is_judged_on_the_union_of_incumbents() {
        let r = Route::new("A", "B");
        let t0 = q("2005Q1");
        let te = t0 + 15;
        let mut records = Vec::new();
        for k in -12..=12 {
            let carrier = if k % 2 == 0 { "AA" } else { "UA" };
            records.push(rcq(carrier, &r, t0 + k));
            records.push(rcq("WN", &r, t0 + k));
        }
        records.push(rcq("AA", &r, te));
        let out = qualify_routes(raw_event(&r, t0, te), &records);
        assert_eq!(out.events.len(), 1);
        assert_eq!(
            out.events[0].incumbents,
            ["AA", "UA"].iter().map(|s| s.to_string()).collect()
        );

        let gap: Vec<_> = records.iter().filter(|x| x.quarter != t0 + 7).cloned().collect();
        let out = qualify_routes(raw_event(&r, t0, te), &gap);
        assert!(out.events.is_empty());
        assert_eq!(out.rejected(RejectReason::NoIncumbentCoverage), 1);

        let no_te: Vec<_> = records.iter().filter(|x| x.quarter != te).cloned().collect();
        assert!(qualify_routes(raw_event(&r, t0, te), &no_te).events.is_empty());
    }

    #[test]
    fn events_csv_round_trip() {
        let r = Route::new("DEN", "SNA");
        let mut ev = raw_event(&r, q("2006Q1"), q("2008Q4")).events;
        ev[0].incumbents.insert("UA".into());
        ev[0].incumbents.insert("F9".into());
        let mut buf = Vec::new();
        write_threat_events_csv(&ev, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ENTRANT,ORIGIN,DEST,TS,T0,TE,N_INCUMBENTS"));
        assert!(text.contains("WN,DEN,SNA,2005Q4,2006Q1,2008Q4,2,F9;UA"));
        assert_eq!(read_threat_events_csv(buf.as_slice()).unwrap(), ev);
    }
}
