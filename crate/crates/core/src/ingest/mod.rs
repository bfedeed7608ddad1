//! Itinerary and segment ingest.
//!
//! Raw files follow the DB1B Coupon / Ticket and T-100 Domestic Segment
//! schemas (reduced to the columns used here). Each filter stage records how
//! many units it dropped so the whole run can be audited from a
//! [`FilterLog`].

mod aggregate;
mod coupon;
mod cpi;
mod merge;
mod supply;
mod t100;
mod temperature;
mod ticket;

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

pub use aggregate::{aggregate_db1b, nearest_rank, Db1bAggregate, FareObservation};
pub use coupon::{parse_coupon, CouponItinerary, CouponParse, FareClass};
pub use cpi::{deflate, CpiSeries};
pub use merge::{merge_itineraries, Itinerary};
pub use supply::{
    attach_temperature, merge_supply_demand, read_rcq_csv, write_rcq_csv, FareSummary,
    RouteCarrierQuarter,
};
pub use t100::{aggregate_t100, parse_t100, AircraftConfig, SegmentRecord, ServiceClass, T100Aggregate};
pub use temperature::{temp_differential, AirportStates, StateTemperatures};
pub use ticket::{parse_ticket, TicketParse, TicketRecord};

use crate::error::{Error, Result};

/// The entrant whose DFW records are dropped for 1993Q1–1999Q4.
pub const SOUTHWEST: &str = "WN";

/// Contiguous U.S. states plus DC (Alaska and Hawaii excluded).
pub const CONTINENTAL_STATES: [&str; 49] = [
    "AL", "AR", "AZ", "CA", "CO", "CT", "DC", "DE", "FL", "GA", "IA", "ID", "IL", "IN", "KS", "KY",
    "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT", "NC", "ND", "NE", "NH", "NJ", "NM", "NV",
    "NY", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV",
    "WY",
];

/// U.S. domestic carriers accepted by the cabotage filter unless overridden.
pub const DEFAULT_US_CARRIERS: [&str; 40] = [
    "9E", "9K", "AA", "AQ", "AS", "AX", "B6", "C5", "CO", "CP", "DH", "DL", "EV", "F9", "FL", "G4",
    "G7", "HA", "HP", "KS", "MQ", "NK", "NW", "OH", "OO", "PT", "QX", "RP", "SY", "TW", "TZ", "U5",
    "UA", "US", "VX", "WN", "XE", "YV", "YX", "ZW",
];

/// Configuration shared by the ingest filters.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub us_carriers: BTreeSet<String>,
    pub continental_states: BTreeSet<String>,
    /// Share of business/first tickets above which a carrier keeps all classes.
    pub premium_share_threshold: f64,
    /// Nominal round-trip fares strictly below this are dropped.
    pub min_fare: f64,
    pub min_db1b_passengers: u64,
    pub fare_trim_percentile: f64,
    pub min_routes_per_carrier: usize,
    pub min_t100_passengers: u64,
    pub min_t100_seats: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            us_carriers: DEFAULT_US_CARRIERS.iter().map(|s| s.to_string()).collect(),
            continental_states: CONTINENTAL_STATES.iter().map(|s| s.to_string()).collect(),
            premium_share_threshold: 0.75,
            min_fare: 20.0,
            min_db1b_passengers: 100,
            fare_trim_percentile: 99.0,
            min_routes_per_carrier: 10,
            min_t100_passengers: 2000,
            min_t100_seats: 2000,
        }
    }
}

/// One filter stage: `dropped + retained` equals the stage input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCount {
    pub stage: String,
    pub dropped: usize,
    pub retained: usize,
}

impl StageCount {
    pub fn input(&self) -> usize {
        self.dropped + self.retained
    }
}

/// Ordered per-stage drop counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterLog {
    pub stages: Vec<StageCount>,
}

impl FilterLog {
    pub fn record(&mut self, stage: impl Into<String>, input: usize, retained: usize) {
        debug_assert!(retained <= input);
        self.stages.push(StageCount {
            stage: stage.into(),
            dropped: input - retained,
            retained,
        });
    }

    pub fn extend(&mut self, other: FilterLog) {
        self.stages.extend(other.stages);
    }

    pub fn get(&self, stage: &str) -> Option<&StageCount> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Sum counts of identically named stages, keeping first-seen order.
    pub fn merged(&self) -> FilterLog {
        let mut out: Vec<StageCount> = Vec::new();
        for s in &self.stages {
            match out.iter_mut().find(|o| o.stage == s.stage) {
                Some(o) => {
                    o.dropped += s.dropped;
                    o.retained += s.retained;
                }
                None => out.push(s.clone()),
            }
        }
        FilterLog { stages: out }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["stage", "dropped", "retained"])?;
        for s in &self.stages {
            wr.write_record([s.stage.clone(), s.dropped.to_string(), s.retained.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io("<filter log>", e))?;
        Ok(())
    }
}

/// A record-level problem: the row is skipped and counted, the run continues.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Header-indexed CSV access with line numbers for diagnostics.
pub(crate) struct Table<R: Read> {
    file: String,
    reader: csv::Reader<R>,
    columns: Vec<usize>,
    optional: Vec<Option<usize>>,
}

pub(crate) struct Row {
    pub line: u64,
    fields: Vec<String>,
    optional: Vec<Option<String>>,
}

impl Row {
    pub fn get(&self, i: usize) -> &str {
        &self.fields[i]
    }

    pub fn optional(&self, i: usize) -> Option<&str> {
        self.optional[i].as_deref()
    }

    pub fn parse<T: std::str::FromStr>(&self, i: usize, name: &str) -> Result<T, RowError> {
        let raw = self.get(i);
        raw.parse().map_err(|_| RowError {
            line: self.line,
            message: format!("cannot parse {name} from {raw:?}"),
        })
    }

    pub fn error(&self, message: impl Into<String>) -> RowError {
        RowError {
            line: self.line,
            message: message.into(),
        }
    }
}

impl<R: Read> Table<R> {
    pub fn new(file: &str, reader: R, required: &[&str], optional: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = reader.headers()?.clone();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::MissingColumn {
                file: file.to_string(),
                column: required.first().copied().unwrap_or("").to_string(),
            });
        }
        let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let columns = required
            .iter()
            .map(|name| {
                find(name).ok_or_else(|| Error::MissingColumn {
                    file: file.to_string(),
                    column: name.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let optional = optional.iter().map(|name| find(name)).collect();
        Ok(Table {
            file: file.to_string(),
            reader,
            columns,
            optional,
        })
    }

    /// Iterate rows; structurally broken rows come back as [`RowError`].
    pub fn rows(&mut self) -> impl Iterator<Item = Result<Row, RowError>> + '_ {
        let columns = self.columns.clone();
        let optional = self.optional.clone();
        let file = self.file.clone();
        self.reader.records().map(move |rec| {
            let rec = rec.map_err(|e| RowError {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: format!("{file}: {e}"),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let mut fields = Vec::with_capacity(columns.len());
            for &c in &columns {
                match rec.get(c) {
                    Some(v) => fields.push(v.to_string()),
                    None => {
                        return Err(RowError {
                            line,
                            message: format!("{file}: row has {} fields", rec.len()),
                        })
                    }
                }
            }
            let optional = optional
                .iter()
                .map(|c| c.and_then(|c| rec.get(c)).map(str::to_string))
                .collect();
            Ok(Row {
                line,
                fields,
                optional,
            })
        })
    }
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim() {
        "0" | "0.0" | "0.00" | "false" | "FALSE" | "" => Some(false),
        "1" | "1.0" | "1.00" | "true" | "TRUE" => Some(true),
        _ => None,
    }
}
