use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{
    aggregate::nearest_rank, temp_differential, AirportStates, CpiSeries, Db1bAggregate,
    FareObservation, FilterLog, StateTemperatures, T100Aggregate, Table,
};
use crate::error::{Error, Result};
use crate::quarter::Quarter;
use crate::route::Route;

/// Passenger-weighted fare distribution summary in real dollars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FareSummary {
    pub mean: f64,
    pub p10: f64,
    pub p25: f64,
    pub p75: f64,
    pub p90: f64,
}

impl FareSummary {
    /// `obs` must be sorted by fare and nonempty.
    pub fn from_sorted(obs: &[FareObservation]) -> Option<Self> {
        let total: u64 = obs.iter().map(|o| o.passengers as u64).sum();
        if total == 0 {
            return None;
        }
        let mean = obs.iter().map(|o| o.fare * o.passengers as f64).sum::<f64>() / total as f64;
        Some(FareSummary {
            mean,
            p10: nearest_rank(obs, 10.0)?,
            p25: nearest_rank(obs, 25.0)?,
            p75: nearest_rank(obs, 75.0)?,
            p90: nearest_rank(obs, 90.0)?,
        })
    }
}

/// One merged demand and supply observation on an unordered route.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteCarrierQuarter {
    pub carrier: String,
    pub route: Route,
    pub quarter: Quarter,
    pub db1b_passengers: u64,
    pub fares_real: FareSummary,
    pub t100_passengers: u64,
    pub t100_seats: u64,
    pub load_factor: f64,
    pub distance_miles: f64,
    pub temp_differential_f: Option<f64>,
}

type DirKey = (String, String, String, Quarter);

/// Inner join of directional DB1B and T-100 aggregates on
/// (carrier, origin, destination, quarter), followed by collapsing the two
/// directions of each route into one record: passengers and seats are
/// summed and fares pooled passenger-weighted, then deflated to base-quarter
/// dollars.
pub fn merge_supply_demand(
    db1b: &[Db1bAggregate],
    t100: &[T100Aggregate],
    cpi: &CpiSeries,
) -> Result<(Vec<RouteCarrierQuarter>, FilterLog)> {
    let mut log = FilterLog::default();
    let supply: BTreeMap<DirKey, &T100Aggregate> = t100
        .iter()
        .map(|t| {
            (
                (t.carrier.clone(), t.origin.clone(), t.destination.clone(), t.quarter),
                t,
            )
        })
        .collect();
    let joined: Vec<(&Db1bAggregate, &T100Aggregate)> = db1b
        .iter()
        .filter_map(|d| {
            supply
                .get(&(d.carrier.clone(), d.origin.clone(), d.destination.clone(), d.quarter))
                .map(|t| (d, *t))
        })
        .collect();
    log.record("merge.db1b_in_t100", db1b.len(), joined.len());
    log.record("merge.t100_in_db1b", t100.len(), joined.len());

    let mut pooled: BTreeMap<(String, Route, Quarter), Vec<(&Db1bAggregate, &T100Aggregate)>> =
        BTreeMap::new();
    for (d, t) in joined {
        pooled
            .entry((d.carrier.clone(), Route::new(d.origin.as_str(), d.destination.as_str()), d.quarter))
            .or_default()
            .push((d, t));
    }

    let mut out = Vec::with_capacity(pooled.len());
    for ((carrier, route, quarter), parts) in pooled {
        let ratio = cpi.ratio(quarter, cpi.base_quarter)?;
        let mut fares: Vec<FareObservation> = parts
            .iter()
            .flat_map(|(d, _)| d.fares.iter())
            .map(|o| FareObservation {
                fare: o.fare * ratio,
                passengers: o.passengers,
            })
            .collect();
        fares.sort_by(|a, b| a.fare.total_cmp(&b.fare));
        let Some(fares_real) = FareSummary::from_sorted(&fares) else {
            continue;
        };
        let db1b_passengers: u64 = parts.iter().map(|(d, _)| d.passengers).sum();
        let t100_passengers: u64 = parts.iter().map(|(_, t)| t.passengers).sum();
        let t100_seats: u64 = parts.iter().map(|(_, t)| t.seats).sum();
        let distance_miles = parts
            .iter()
            .map(|(d, _)| d.distance * d.passengers as f64)
            .sum::<f64>()
            / db1b_passengers as f64;
        out.push(RouteCarrierQuarter {
            carrier,
            route,
            quarter,
            db1b_passengers,
            fares_real,
            t100_passengers,
            t100_seats,
            load_factor: t100_passengers as f64 / t100_seats as f64,
            distance_miles,
            temp_differential_f: None,
        });
    }
    Ok((out, log))
}

/// Fill the temperature differential of each record from the state tables.
/// Returns how many records have no value.
pub fn attach_temperature(
    records: &mut [RouteCarrierQuarter],
    airports: &AirportStates,
    temps: &StateTemperatures,
) -> usize {
    let mut missing = 0;
    for r in records.iter_mut() {
        r.temp_differential_f = temp_differential(&r.route, r.quarter.year(), airports, temps);
        if r.temp_differential_f.is_none() {
            missing += 1;
        }
    }
    missing
}

pub const RCQ_COLUMNS: [&str; 15] = [
    "CARRIER",
    "ORIGIN",
    "DEST",
    "QUARTER",
    "DB1B_PASSENGERS",
    "FARE_MEAN",
    "FARE_P10",
    "FARE_P25",
    "FARE_P75",
    "FARE_P90",
    "T100_PASSENGERS",
    "T100_SEATS",
    "LOAD_FACTOR",
    "DISTANCE",
    "TEMP_DIFF_F",
];

pub fn write_rcq_csv<W: Write>(records: &[RouteCarrierQuarter], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RCQ_COLUMNS)?;
    for r in records {
        wr.write_record([
            r.carrier.clone(),
            r.route.first().to_string(),
            r.route.second().to_string(),
            r.quarter.to_string(),
            r.db1b_passengers.to_string(),
            r.fares_real.mean.to_string(),
            r.fares_real.p10.to_string(),
            r.fares_real.p25.to_string(),
            r.fares_real.p75.to_string(),
            r.fares_real.p90.to_string(),
            r.t100_passengers.to_string(),
            r.t100_seats.to_string(),
            r.load_factor.to_string(),
            r.distance_miles.to_string(),
            r.temp_differential_f.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("<rcq csv>", e))?;
    Ok(())
}

pub fn read_rcq_csv<R: Read>(reader: R) -> Result<Vec<RouteCarrierQuarter>> {
    let mut table = Table::new("route-carrier-quarter", reader, &RCQ_COLUMNS, &[])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let parsed = (|| -> Result<RouteCarrierQuarter, super::RowError> {
            let f = |i: usize, name: &str| row.parse::<f64>(i, name);
            let temp = match row.get(14) {
                "" => None,
                _ => Some(f(14, "TEMP_DIFF_F")?),
            };
            Ok(RouteCarrierQuarter {
                carrier: row.get(0).to_string(),
                route: Route::new(row.get(1), row.get(2)),
                quarter: row.get(3).parse().map_err(|e: Error| row.error(e.to_string()))?,
                db1b_passengers: row.parse(4, "DB1B_PASSENGERS")?,
                fares_real: FareSummary {
                    mean: f(5, "FARE_MEAN")?,
                    p10: f(6, "FARE_P10")?,
                    p25: f(7, "FARE_P25")?,
                    p75: f(8, "FARE_P75")?,
                    p90: f(9, "FARE_P90")?,
                },
                t100_passengers: row.parse(10, "T100_PASSENGERS")?,
                t100_seats: row.parse(11, "T100_SEATS")?,
                load_factor: f(12, "LOAD_FACTOR")?,
                distance_miles: f(13, "DISTANCE")?,
                temp_differential_f: temp,
            })
        })()
        .map_err(|e| Error::Parse(format!("route-carrier-quarter {e}")))?;
        out.push(parsed);
    }
    Ok(out)
}
