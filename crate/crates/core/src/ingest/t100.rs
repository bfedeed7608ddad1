use std::collections::BTreeMap;
use std::io::Read;

use super::{FilterLog, IngestConfig, Row, RowError, Table};
use crate::error::Result;
use crate::quarter::Quarter;

/// T-100 service class codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceClass {
    /// F: scheduled passenger/cargo service.
    ScheduledPassenger,
    /// G: scheduled all-cargo service.
    ScheduledCargo,
    /// L: non-scheduled civilian passenger/cargo service.
    CharterPassenger,
    /// P: non-scheduled civilian all-cargo service.
    CharterCargo,
    /// K, N, R: military and other non-scheduled services.
    Other,
}

impl ServiceClass {
    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim().to_ascii_uppercase().as_str() {
            "F" => Some(ServiceClass::ScheduledPassenger),
            "G" => Some(ServiceClass::ScheduledCargo),
            "L" => Some(ServiceClass::CharterPassenger),
            "P" => Some(ServiceClass::CharterCargo),
            "K" | "N" | "R" => Some(ServiceClass::Other),
            _ => None,
        }
    }
}

/// T-100 aircraft configuration codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AircraftConfig {
    Unknown,
    Passenger,
    Freight,
    Combined,
    Seaplane,
}

impl AircraftConfig {
    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim() {
            "0" => Some(AircraftConfig::Unknown),
            "1" => Some(AircraftConfig::Passenger),
            "2" => Some(AircraftConfig::Freight),
            "3" => Some(AircraftConfig::Combined),
            "4" => Some(AircraftConfig::Seaplane),
            _ => None,
        }
    }

    fn carries_passengers(self) -> bool {
        matches!(self, AircraftConfig::Passenger | AircraftConfig::Combined)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub carrier: String,
    pub origin: String,
    pub destination: String,
    pub year: i32,
    pub month: u32,
    pub passengers: u64,
    pub seats: u64,
    pub service_class: ServiceClass,
    pub config: AircraftConfig,
}

impl SegmentRecord {
    pub fn quarter(&self) -> Quarter {
        Quarter::from_month(self.year, self.month).expect("month validated on parse")
    }
}

/// Directional route-carrier-quarter supply totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct T100Aggregate {
    pub carrier: String,
    pub origin: String,
    pub destination: String,
    pub quarter: Quarter,
    pub passengers: u64,
    pub seats: u64,
}

fn parse_row(row: &Row) -> Result<SegmentRecord, RowError> {
    let month: u32 = row.parse(4, "MONTH")?;
    if !(1..=12).contains(&month) {
        return Err(row.error(format!("invalid MONTH {month}")));
    }
    let count = |i: usize, name: &str| -> Result<u64, RowError> {
        let v: f64 = row.parse(i, name)?;
        if !v.is_finite() || v < 0.0 || v.fract() != 0.0 {
            return Err(row.error(format!("{name} must be a nonnegative integer, got {v}")));
        }
        Ok(v as u64)
    };
    let service_class = ServiceClass::from_code(row.get(7))
        .ok_or_else(|| row.error(format!("unknown SERVICE_CLASS {:?}", row.get(7))))?;
    let config = AircraftConfig::from_code(row.get(8))
        .ok_or_else(|| row.error(format!("unknown AIRCRAFT_CONFIG {:?}", row.get(8))))?;
    Ok(SegmentRecord {
        carrier: row.get(0).to_string(),
        origin: row.get(1).to_string(),
        destination: row.get(2).to_string(),
        year: row.parse(3, "YEAR")?,
        month,
        passengers: count(5, "PASSENGERS")?,
        seats: count(6, "SEATS")?,
        service_class,
        config,
    })
}

/// Parse monthly segment records. Rows with unknown codes or negative
/// counts are reported as [`RowError`]s and skipped.
pub fn parse_t100<R: Read>(reader: R) -> Result<(Vec<SegmentRecord>, Vec<RowError>, FilterLog)> {
    let mut table = Table::new(
        "t100",
        reader,
        &[
            "CARRIER",
            "ORIGIN",
            "DEST",
            "YEAR",
            "MONTH",
            "PASSENGERS",
            "SEATS",
            "SERVICE_CLASS",
            "AIRCRAFT_CONFIG",
        ],
        &[],
    )?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut rows = 0;
    for row in table.rows() {
        rows += 1;
        match row.and_then(|r| parse_row(&r)) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    let mut log = FilterLog::default();
    log.record("t100.malformed_rows", rows, records.len());
    Ok((records, errors, log))
}

/// Keep scheduled passenger service on passenger or combined aircraft, sum
/// to directional route-carrier-quarters and drop totals below the passenger
/// or seat floor. Counts in the log are records for the first stage and
/// aggregates for the second.
pub fn aggregate_t100(
    records: &[SegmentRecord],
    cfg: &IngestConfig,
) -> (Vec<T100Aggregate>, FilterLog) {
    let mut log = FilterLog::default();
    let kept: Vec<&SegmentRecord> = records
        .iter()
        .filter(|r| r.service_class == ServiceClass::ScheduledPassenger && r.config.carries_passengers())
        .collect();
    log.record("t100.domestic_scheduled", records.len(), kept.len());

    let mut sums: BTreeMap<(String, String, String, Quarter), (u64, u64)> = BTreeMap::new();
    for r in kept {
        let e = sums
            .entry((r.carrier.clone(), r.origin.clone(), r.destination.clone(), r.quarter()))
            .or_default();
        e.0 += r.passengers;
        e.1 += r.seats;
    }
    let n = sums.len();
    let aggs: Vec<T100Aggregate> = sums
        .into_iter()
        .filter(|(_, (p, s))| *p >= cfg.min_t100_passengers && *s >= cfg.min_t100_seats)
        .map(|((carrier, origin, destination, quarter), (passengers, seats))| T100Aggregate {
            carrier,
            origin,
            destination,
            quarter,
            passengers,
            seats,
        })
        .collect();
    log.record("t100.low_volume", n, aggs.len());
    (aggs, log)
}
