use std::collections::BTreeMap;

use super::{CouponItinerary, FareClass, FilterLog, TicketRecord};
use crate::quarter::Quarter;

/// Coupon itinerary joined with its ticket fare.
#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    pub itinerary_id: String,
    pub carrier: String,
    pub origin: String,
    pub destination: String,
    pub fare_class: FareClass,
    pub passengers: u32,
    pub one_way_distance: f64,
    pub nominal_fare: f64,
    pub quarter: Quarter,
}

/// Distances recorded by the two sources may differ by rounding.
const DISTANCE_TOLERANCE: f64 = 1.0;

fn index_unique<T>(
    items: &[T],
    id: impl Fn(&T) -> &str,
) -> (BTreeMap<&str, &T>, usize) {
    let mut map: BTreeMap<&str, Option<&T>> = BTreeMap::new();
    for item in items {
        map.entry(id(item))
            .and_modify(|slot| *slot = None)
            .or_insert(Some(item));
    }
    let dups = map.values().filter(|v| v.is_none()).count();
    let unique = map
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
    (unique, dups)
}

/// Inner join on itinerary id. Ids duplicated within either source are
/// dropped, as are ids whose shared fields (quarter, distance, passengers)
/// disagree between the sources.
pub fn merge_itineraries(
    coupons: &[CouponItinerary],
    tickets: &[TicketRecord],
) -> (Vec<Itinerary>, FilterLog) {
    let mut log = FilterLog::default();
    let (coupon_map, coupon_dups) = index_unique(coupons, |c| &c.itinerary_id);
    let (ticket_map, ticket_dups) = index_unique(tickets, |t| &t.itinerary_id);
    log.record(
        "merge.duplicate_coupon_ids",
        coupon_map.len() + coupon_dups,
        coupon_map.len(),
    );
    log.record(
        "merge.duplicate_ticket_ids",
        ticket_map.len() + ticket_dups,
        ticket_map.len(),
    );

    let joined: Vec<(&CouponItinerary, &TicketRecord)> = coupon_map
        .iter()
        .filter_map(|(id, c)| ticket_map.get(id).map(|t| (*c, *t)))
        .collect();
    log.record("merge.in_both_sources", coupon_map.len(), joined.len());

    let n = joined.len();
    let merged: Vec<Itinerary> = joined
        .into_iter()
        .filter(|(c, t)| {
            c.quarter == t.quarter
                && (c.round_trip_distance - t.distance_full).abs() <= DISTANCE_TOLERANCE
                && t.passengers.is_none_or(|p| p == c.passengers)
        })
        .map(|(c, t)| Itinerary {
            itinerary_id: c.itinerary_id.clone(),
            carrier: c.operating_carrier.clone(),
            origin: c.origin().to_string(),
            destination: c.destination().to_string(),
            fare_class: c.fare_class,
            passengers: c.passengers,
            one_way_distance: c.one_way_distance,
            nominal_fare: t.nominal_fare,
            quarter: c.quarter,
        })
        .collect();
    log.record("merge.consistent_fields", n, merged.len());
    (merged, log)
}
