use std::io::Read;

use super::{parse_flag, FilterLog, Row, RowError, Table};
use crate::error::Result;
use crate::quarter::Quarter;

#[derive(Debug, Clone, PartialEq)]
pub struct TicketRecord {
    pub itinerary_id: String,
    pub nominal_fare: f64,
    pub bulk_fare_unreliable: bool,
    /// Full itinerary distance in statute miles.
    pub distance_full: f64,
    pub quarter: Quarter,
    /// Present when the file carries a PASSENGERS column.
    pub passengers: Option<u32>,
}

#[derive(Debug, Default)]
pub struct TicketParse {
    pub tickets: Vec<TicketRecord>,
    pub log: FilterLog,
    pub row_errors: Vec<RowError>,
}

fn parse_row(row: &Row) -> Result<TicketRecord, RowError> {
    let nominal_fare: f64 = row.parse(1, "ITIN_FARE")?;
    if !nominal_fare.is_finite() || nominal_fare < 0.0 {
        return Err(row.error(format!("negative or invalid fare {nominal_fare}")));
    }
    let bulk = parse_flag(row.get(2))
        .ok_or_else(|| row.error(format!("invalid BULK_FARE_UNRELIABLE {:?}", row.get(2))))?;
    let distance_full: f64 = row.parse(3, "DISTANCE_FULL")?;
    if !distance_full.is_finite() || distance_full < 0.0 {
        return Err(row.error(format!("invalid DISTANCE_FULL {distance_full}")));
    }
    let year: i32 = row.parse(4, "YEAR")?;
    let q: u8 = row.parse(5, "QUARTER")?;
    let passengers = match row.optional(0) {
        None | Some("") => None,
        Some(raw) => Some(
            raw.parse::<u32>()
                .map_err(|_| row.error(format!("cannot parse PASSENGERS from {raw:?}")))?,
        ),
    };
    Ok(TicketRecord {
        itinerary_id: row.get(0).to_string(),
        nominal_fare,
        bulk_fare_unreliable: bulk,
        distance_full,
        quarter: Quarter::new(year, q).map_err(|e| row.error(e.to_string()))?,
        passengers,
    })
}

/// Parse a ticket file, dropping fares above $1 per mile of travel and bulk
/// fares flagged unreliable.
pub fn parse_ticket<R: Read>(reader: R) -> Result<TicketParse> {
    let mut table = Table::new(
        "ticket",
        reader,
        &[
            "ITIN_ID",
            "ITIN_FARE",
            "BULK_FARE_UNRELIABLE",
            "DISTANCE_FULL",
            "YEAR",
            "QUARTER",
        ],
        &["PASSENGERS"],
    )?;
    let mut out = TicketParse::default();
    let mut tickets = Vec::new();
    let mut rows = 0;
    for row in table.rows() {
        rows += 1;
        match row.and_then(|r| parse_row(&r)) {
            Ok(t) => tickets.push(t),
            Err(e) => out.row_errors.push(e),
        }
    }
    out.log.record("ticket.malformed_rows", rows, tickets.len());

    let n = tickets.len();
    tickets.retain(|t: &TicketRecord| t.nominal_fare <= t.distance_full);
    out.log.record("ticket.credible_fare", n, tickets.len());

    let n = tickets.len();
    tickets.retain(|t| !t.bulk_fare_unreliable);
    out.log.record("ticket.reliable_bulk_fare", n, tickets.len());

    out.tickets = tickets;
    Ok(out)
}
