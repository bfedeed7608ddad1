use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use super::{FilterLog, IngestConfig, Row, RowError, Table};
use crate::error::Result;
use crate::quarter::Quarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FareClass {
    Coach,
    Business,
    First,
}

impl FareClass {
    /// DB1B fare class codes: X/Y restricted and unrestricted coach, C/D
    /// business, F/G first. Long names are accepted as well.
    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim().to_ascii_uppercase().as_str() {
            "X" | "Y" | "COACH" => Some(FareClass::Coach),
            "C" | "D" | "BUSINESS" => Some(FareClass::Business),
            "F" | "G" | "FIRST" => Some(FareClass::First),
            _ => None,
        }
    }

    pub fn is_premium(self) -> bool {
        !matches!(self, FareClass::Coach)
    }

    pub fn code(self) -> &'static str {
        match self {
            FareClass::Coach => "Y",
            FareClass::Business => "C",
            FareClass::First => "F",
        }
    }
}

/// A nonstop round-trip itinerary that passed the coupon filters.
#[derive(Debug, Clone, PartialEq)]
pub struct CouponItinerary {
    pub itinerary_id: String,
    pub operating_carrier: String,
    pub ticketing_carrier: String,
    /// Outbound then return leg.
    pub segments: Vec<(String, String)>,
    pub fare_class: FareClass,
    pub passengers: u32,
    pub one_way_distance: f64,
    pub round_trip_distance: f64,
    pub quarter: Quarter,
}

impl CouponItinerary {
    pub fn origin(&self) -> &str {
        &self.segments[0].0
    }

    pub fn destination(&self) -> &str {
        &self.segments[0].1
    }
}

#[derive(Debug, Default)]
pub struct CouponParse {
    pub itineraries: Vec<CouponItinerary>,
    pub log: FilterLog,
    pub row_errors: Vec<RowError>,
}

#[derive(Debug, Clone)]
struct Segment {
    seq: u32,
    origin: String,
    dest: String,
    op_carrier: String,
    tk_carrier: String,
    fare_class: Option<FareClass>,
    passengers: u32,
    distance: f64,
    origin_state: String,
    dest_state: String,
    quarter: Quarter,
}

const COLUMNS: [&str; 13] = [
    "ITIN_ID",
    "SEQ_NUM",
    "ORIGIN",
    "DEST",
    "OP_CARRIER",
    "TK_CARRIER",
    "FARE_CLASS",
    "PASSENGERS",
    "DISTANCE",
    "ORIGIN_STATE",
    "DEST_STATE",
    "YEAR",
    "QUARTER",
];

fn parse_segment(row: &Row) -> Result<(String, Segment), RowError> {
    let id = row.get(0).to_string();
    if id.is_empty() {
        return Err(row.error("empty ITIN_ID"));
    }
    let passengers: u32 = row.parse(7, "PASSENGERS")?;
    if passengers == 0 {
        return Err(row.error("PASSENGERS must be positive"));
    }
    let distance: f64 = row.parse(8, "DISTANCE")?;
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(row.error(format!("invalid DISTANCE {distance}")));
    }
    let year: i32 = row.parse(11, "YEAR")?;
    let q: u8 = row.parse(12, "QUARTER")?;
    let quarter = Quarter::new(year, q).map_err(|e| row.error(e.to_string()))?;
    Ok((
        id,
        Segment {
            seq: row.parse(1, "SEQ_NUM")?,
            origin: row.get(2).to_string(),
            dest: row.get(3).to_string(),
            op_carrier: row.get(4).to_string(),
            tk_carrier: row.get(5).to_string(),
            fare_class: FareClass::from_code(row.get(6)),
            passengers,
            distance,
            origin_state: row.get(9).to_string(),
            dest_state: row.get(10).to_string(),
            quarter,
        },
    ))
}

/// Parse a coupon file and keep nonstop round trips without codesharing,
/// with a consistent fare class and passenger count, between continental
/// U.S. airports, operated by a U.S. carrier.
pub fn parse_coupon<R: Read>(reader: R, cfg: &IngestConfig) -> Result<CouponParse> {
    let mut table = Table::new("coupon", reader, &COLUMNS, &[])?;
    let mut out = CouponParse::default();
    let mut groups: BTreeMap<String, Vec<Segment>> = BTreeMap::new();
    let mut rows = 0usize;
    for row in table.rows() {
        rows += 1;
        match row.and_then(|r| parse_segment(&r)) {
            Ok((id, seg)) => groups.entry(id).or_default().push(seg),
            Err(e) => out.row_errors.push(e),
        }
    }
    out.log
        .record("coupon.malformed_rows", rows, rows - out.row_errors.len());

    let mut itins: Vec<(String, Vec<Segment>)> = groups.into_iter().collect();
    for (_, segs) in itins.iter_mut() {
        segs.sort_by_key(|s| s.seq);
    }

    let n = itins.len();
    itins.retain(|(_, s)| {
        let seqs: BTreeSet<u32> = s.iter().map(|x| x.seq).collect();
        seqs.len() == s.len() && s.iter().all(|x| x.quarter == s[0].quarter)
    });
    out.log.record("coupon.duplicate_or_mixed_segments", n, itins.len());

    let n = itins.len();
    itins.retain(|(_, s)| {
        s.len() == 2
            && s[0].dest == s[1].origin
            && s[0].origin == s[1].dest
            && s[0].origin != s[0].dest
    });
    out.log.record("coupon.nonstop_round_trip", n, itins.len());

    let n = itins.len();
    itins.retain(|(_, s)| {
        s.iter()
            .all(|x| x.op_carrier == x.tk_carrier && x.op_carrier == s[0].op_carrier)
    });
    out.log.record("coupon.no_codesharing", n, itins.len());

    let n = itins.len();
    itins.retain(|(_, s)| {
        s[0].fare_class.is_some()
            && s.iter()
                .all(|x| x.fare_class == s[0].fare_class && x.passengers == s[0].passengers)
    });
    out.log.record("coupon.fare_class_passengers", n, itins.len());

    let n = itins.len();
    itins.retain(|(_, s)| {
        s.iter().all(|x| {
            cfg.continental_states.contains(&x.origin_state)
                && cfg.continental_states.contains(&x.dest_state)
        })
    });
    out.log.record("coupon.domestic_routes", n, itins.len());

    let n = itins.len();
    itins.retain(|(_, s)| cfg.us_carriers.contains(&s[0].op_carrier));
    out.log.record("coupon.no_cabotage", n, itins.len());

    out.itineraries = itins
        .into_iter()
        .map(|(id, s)| CouponItinerary {
            itinerary_id: id,
            operating_carrier: s[0].op_carrier.clone(),
            ticketing_carrier: s[0].tk_carrier.clone(),
            segments: s.iter().map(|x| (x.origin.clone(), x.dest.clone())).collect(),
            fare_class: s[0].fare_class.expect("checked by fare class filter"),
            passengers: s[0].passengers,
            one_way_distance: s[0].distance,
            round_trip_distance: s.iter().map(|x| x.distance).sum(),
            quarter: s[0].quarter,
        })
        .collect();
    Ok(out)
}
