use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use super::{event_bin, EventBin, ThreatEvent};
use crate::error::{Error, Result};
use crate::ingest::RouteCarrierQuarter;
use crate::netgraph::{MeasureIndex, NetworkMeasure};
use crate::quarter::Quarter;
use crate::route::Route;

/// Logged dependent variables of the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    MeanFare,
    P10,
    P25,
    P75,
    P90,
    Passengers,
    Seats,
    LoadFactor,
}

impl Outcome {
    pub const ALL: [Outcome; 8] = [
        Outcome::MeanFare,
        Outcome::P10,
        Outcome::P25,
        Outcome::P75,
        Outcome::P90,
        Outcome::Passengers,
        Outcome::Seats,
        Outcome::LoadFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::MeanFare => "mean_fare",
            Outcome::P10 => "p10",
            Outcome::P25 => "p25",
            Outcome::P75 => "p75",
            Outcome::P90 => "p90",
            Outcome::Passengers => "passengers",
            Outcome::Seats => "seats",
            Outcome::LoadFactor => "load_factor",
        }
    }

    pub fn column(self) -> String {
        format!("LN_{}", self.name().to_ascii_uppercase())
    }

    fn level(self, r: &RouteCarrierQuarter) -> f64 {
        match self {
            Outcome::MeanFare => r.fares_real.mean,
            Outcome::P10 => r.fares_real.p10,
            Outcome::P25 => r.fares_real.p25,
            Outcome::P75 => r.fares_real.p75,
            Outcome::P90 => r.fares_real.p90,
            Outcome::Passengers => r.t100_passengers as f64,
            Outcome::Seats => r.t100_seats as f64,
            Outcome::LoadFactor => r.load_factor,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::UnknownOutcome(s.to_string()))
    }
}

/// One incumbent carrier-route-quarter of the estimation panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelObservation {
    pub carrier: String,
    pub route: Route,
    pub quarter: Quarter,
    pub t0: Quarter,
    pub te: Quarter,
    pub bin: EventBin,
    /// Natural logs, indexed like [`Outcome::ALL`].
    pub outcomes: [f64; 8],
    pub distance_hundreds: f64,
    pub temp_differential: Option<f64>,
    /// Indexed like [`NetworkMeasure::ALL`].
    pub z: [Option<f64>; 12],
    pub weight: f64,
    pub cluster_id: String,
}

impl PanelObservation {
    pub fn outcome(&self, o: Outcome) -> f64 {
        self.outcomes[o as usize]
    }

    pub fn distance_hundreds_sq(&self) -> f64 {
        self.distance_hundreds * self.distance_hundreds
    }

    pub fn measure(&self, m: NetworkMeasure) -> Option<f64> {
        self.z[m.position()]
    }
}

#[derive(Debug, Clone, Default)]
pub struct PanelBuild {
    pub rows: Vec<PanelObservation>,
    pub dropped_nonpositive: usize,
    /// Post-entry quarters lost because the incumbent left the route.
    pub truncated: usize,
}

fn observation(
    ev: &ThreatEvent,
    r: &RouteCarrierQuarter,
    bin: EventBin,
    index: &MeasureIndex,
) -> Option<PanelObservation> {
    let levels = Outcome::ALL.map(|o| o.level(r));
    if let Some(o) = Outcome::ALL.iter().find(|o| !(o.level(r) > 0.0)) {
        log::warn!(
            "dropping {} {} {}: {} is not positive",
            r.carrier,
            r.route,
            r.quarter,
            o
        );
        return None;
    }
    Some(PanelObservation {
        carrier: r.carrier.clone(),
        route: r.route.clone(),
        quarter: r.quarter,
        t0: ev.t0,
        te: ev.te,
        bin,
        outcomes: levels.map(f64::ln),
        distance_hundreds: r.distance_miles / 100.0,
        temp_differential: r.temp_differential_f,
        z: index.profile(&r.carrier, &r.route, r.quarter),
        weight: r.db1b_passengers as f64,
        cluster_id: format!("{}:{}", r.carrier, r.route),
    })
}

/// One row per qualified incumbent and served quarter in
/// `t0-12 ..= min(te-1, t0+12)` and `te ..= te+12`; post-entry rows stop at
/// the incumbent's first absence. Rows come out sorted by carrier, route,
/// quarter.
pub fn build_panel(
    events: &[ThreatEvent],
    records: &[RouteCarrierQuarter],
    index: &MeasureIndex,
) -> Result<PanelBuild> {
    let by_key: BTreeMap<(&str, &Route, Quarter), &RouteCarrierQuarter> = records
        .iter()
        .map(|r| ((r.carrier.as_str(), &r.route, r.quarter), r))
        .collect();
    let mut out = PanelBuild::default();
    for ev in events {
        for carrier in &ev.incumbents {
            let pre_end = (ev.te - 1).min(ev.t0 + 12);
            for t in (ev.t0 - 12).range_to(pre_end) {
                if let Some(r) = by_key.get(&(carrier.as_str(), &ev.route, t)) {
                    let bin = event_bin(t, ev.t0, ev.te)?;
                    match observation(ev, r, bin, index) {
                        Some(o) => out.rows.push(o),
                        None => out.dropped_nonpositive += 1,
                    }
                }
            }
            for (k, t) in ev.te.range_to(ev.te + 12).enumerate() {
                let Some(r) = by_key.get(&(carrier.as_str(), &ev.route, t)) else {
                    out.truncated += 13 - k;
                    break;
                };
                let bin = event_bin(t, ev.t0, ev.te)?;
                match observation(ev, r, bin, index) {
                    Some(o) => out.rows.push(o),
                    None => out.dropped_nonpositive += 1,
                }
            }
        }
    }
    out.rows.sort_by(|a, b| {
        (&a.carrier, &a.route, a.quarter).cmp(&(&b.carrier, &b.route, b.quarter))
    });
    Ok(out)
}

fn header() -> Vec<String> {
    let mut h: Vec<String> = ["CARRIER", "ORIGIN", "DEST", "QUARTER", "T0", "TE", "BIN"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Outcome::ALL.iter().map(|o| o.column()));
    h.extend(
        ["DISTANCE_HUNDREDS", "DISTANCE_HUNDREDS_SQ", "TEMP_DIFF_F"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend(
        NetworkMeasure::ALL
            .iter()
            .map(|m| format!("Z_{}", m.name().to_ascii_uppercase())),
    );
    h.push("WEIGHT".into());
    h.push("CLUSTER_ID".into());
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_panel_csv<W: Write>(rows: &[PanelObservation], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header())?;
    for r in rows {
        let mut rec = vec![
            r.carrier.clone(),
            r.route.first().to_string(),
            r.route.second().to_string(),
            r.quarter.to_string(),
            r.t0.to_string(),
            r.te.to_string(),
            r.bin.label(),
        ];
        rec.extend(r.outcomes.iter().map(|v| v.to_string()));
        rec.push(r.distance_hundreds.to_string());
        rec.push(r.distance_hundreds_sq().to_string());
        rec.push(opt(r.temp_differential));
        rec.extend(r.z.iter().map(|v| opt(*v)));
        rec.push(r.weight.to_string());
        rec.push(r.cluster_id.clone());
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(|e| Error::io("<panel csv>", e))
}

pub fn read_panel_csv<R: Read>(reader: R) -> Result<Vec<PanelObservation>> {
    let cols = header();
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = crate::ingest::Table::new("panel", reader, &names, &[])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(format!("panel {e}")))?;
        let err = |e: crate::ingest::RowError| Error::Parse(format!("panel {e}"));
        let num = |i: usize, name: &str| row.parse::<f64>(i, name).map_err(err);
        let opt_num = |i: usize, name: &str| -> Result<Option<f64>> {
            if row.get(i).is_empty() {
                Ok(None)
            } else {
                num(i, name).map(Some)
            }
        };
        let mut outcomes = [0.0; 8];
        for (k, o) in outcomes.iter_mut().enumerate() {
            *o = num(7 + k, names[7 + k])?;
        }
        let mut z = [None; 12];
        for (k, v) in z.iter_mut().enumerate() {
            *v = opt_num(18 + k, names[18 + k])?;
        }
        out.push(PanelObservation {
            carrier: row.get(0).to_string(),
            route: Route::new(row.get(1), row.get(2)),
            quarter: row.get(3).parse()?,
            t0: row.get(4).parse()?,
            te: row.get(5).parse()?,
            bin: row.get(6).parse()?,
            outcomes,
            distance_hundreds: num(15, "DISTANCE_HUNDREDS")?,
            temp_differential: opt_num(17, "TEMP_DIFF_F")?,
            z,
            weight: num(30, "WEIGHT")?,
            cluster_id: row.get(31).to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FareSummary;
    use std::collections::BTreeSet;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    fn rcq(carrier: &str, route: &Route, quarter: Quarter, pax: u64) -> RouteCarrierQuarter {
        RouteCarrierQuarter {
            carrier: carrier.into(),
            route: route.clone(),
            quarter,
            db1b_passengers: pax,
            fares_real: FareSummary { mean: 200.0, p10: 100.0, p25: 150.0, p75: 250.0, p90: 300.0 },
            t100_passengers: 3000,
            t100_seats: 4000,
            load_factor: 0.75,
            distance_miles: 850.0,
            temp_differential_f: Some(4.0),
        }
    }

    fn event(route: &Route, t0: Quarter, te: Quarter) -> ThreatEvent {
        ThreatEvent {
            entrant: "WN".into(),
            route: route.clone(),
            t_s: t0 - 4,
            t0,
            te,
            incumbents: BTreeSet::from(["UA".to_string()]),
        }
    }

    #[test]
    fn full_window_row_counts() {
        let r = Route::new("DEN", "SNA");
        let t0 = q("2006Q1");
        let te = t0 + 4;
        let records: Vec<_> = (t0 - 20).range_to(te + 20).map(|t| rcq("UA", &r, t, 150)).collect();
        let p = build_panel(&[event(&r, t0, te)], &records, &MeasureIndex::default()).unwrap();
        let count = |f: fn(EventBin) -> bool| p.rows.iter().filter(|o| f(o.bin)).count();
        assert_eq!(count(|b| b == EventBin::Baseline || b.is_pre()), 12);
        assert_eq!(count(EventBin::is_dual), 4);
        assert_eq!(count(EventBin::is_entry), 13);
        assert_eq!(p.rows.len(), 29);
        assert!(p.rows.iter().all(|o| o.weight == 150.0 && o.cluster_id == "UA:DEN-SNA"));
        assert!((p.rows[0].outcome(Outcome::MeanFare) - 200f64.ln()).abs() < 1e-15);
        assert_eq!(p.rows[0].distance_hundreds, 8.5);
    }

    #[test]
    fn post_entry_rows_stop_at_first_absence() {
        let r = Route::new("DEN", "SNA");
        let t0 = q("2006Q1");
        let te = t0 + 11;
        let records: Vec<_> = (t0 - 12)
            .range_to(te + 12)
            .filter(|&t| t != te + 4)
            .map(|t| rcq("UA", &r, t, 150))
            .collect();
        let p = build_panel(&[event(&r, t0, te)], &records, &MeasureIndex::default()).unwrap();
        let last = p.rows.last().unwrap();
        assert_eq!(last.quarter, te + 3);
        assert_eq!(p.truncated, 9);
    }

    #[test]
    fn nonpositive_outcomes_are_dropped() {
        let r = Route::new("DEN", "SNA");
        let t0 = q("2006Q1");
        let mut bad = rcq("UA", &r, t0, 150);
        bad.fares_real.p10 = 0.0;
        let p = build_panel(&[event(&r, t0, t0 + 2)], &[bad], &MeasureIndex::default()).unwrap();
        assert!(p.rows.is_empty());
        assert_eq!(p.dropped_nonpositive, 1);
    }

    #[test]
    fn panel_csv_round_trip() {
        let r = Route::new("DEN", "SNA");
        let t0 = q("2006Q1");
        let records: Vec<_> = (t0 - 12).range_to(t0 + 8).map(|t| rcq("UA", &r, t, 101)).collect();
        let mut p = build_panel(&[event(&r, t0, t0 + 5)], &records, &MeasureIndex::default()).unwrap();
        p.rows[0].z[0] = Some(0.125);
        p.rows[1].temp_differential = None;
        let mut buf = Vec::new();
        write_panel_csv(&p.rows, &mut buf).unwrap();
        assert_eq!(read_panel_csv(buf.as_slice()).unwrap(), p.rows);
    }
}
