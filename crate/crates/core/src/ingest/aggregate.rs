use std::collections::{BTreeMap, BTreeSet};

use super::{FilterLog, IngestConfig, Itinerary, SOUTHWEST};
use crate::quarter::Quarter;
use crate::route::Route;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FareObservation {
    pub fare: f64,
    pub passengers: u32,
}

/// Directional route-carrier-quarter fare aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct Db1bAggregate {
    pub carrier: String,
    pub origin: String,
    pub destination: String,
    pub quarter: Quarter,
    pub passengers: u64,
    /// Retained nominal fares, sorted ascending.
    pub fares: Vec<FareObservation>,
    /// Passenger-weighted one-way distance.
    pub distance: f64,
}

/// Nearest-rank percentile of a passenger-expanded fare list: the smallest
/// fare whose cumulative passenger count reaches `ceil(p/100 * N)`.
///
/// `obs` must be sorted by fare. Returns `None` for an empty list.
pub fn nearest_rank(obs: &[FareObservation], percentile: f64) -> Option<f64> {
    let total: u64 = obs.iter().map(|o| o.passengers as u64).sum();
    if total == 0 {
        return None;
    }
    let rank = ((percentile / 100.0 * total as f64).ceil() as u64).clamp(1, total);
    let mut cum = 0u64;
    for o in obs {
        cum += o.passengers as u64;
        if cum >= rank {
            return Some(o.fare);
        }
    }
    obs.last().map(|o| o.fare)
}

fn carrier_premium_share(itins: &[Itinerary]) -> BTreeMap<&str, f64> {
    let mut totals: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for it in itins {
        let e = totals.entry(it.carrier.as_str()).or_default();
        e.0 += it.passengers as u64;
        if it.fare_class.is_premium() {
            e.1 += it.passengers as u64;
        }
    }
    totals
        .into_iter()
        .map(|(c, (all, premium))| (c, premium as f64 / all as f64))
        .collect()
}

fn is_southwest_dfw(it: &Itinerary) -> bool {
    let lo = Quarter::new(1993, 1).unwrap();
    let hi = Quarter::new(1999, 4).unwrap();
    it.carrier == SOUTHWEST
        && (it.origin == "DFW" || it.destination == "DFW")
        && it.quarter >= lo
        && it.quarter <= hi
}

type GroupKey = (String, String, String);

fn group_key(it: &Itinerary) -> GroupKey {
    (it.carrier.clone(), it.origin.clone(), it.destination.clone())
}

/// Aggregate merged itineraries of one quarter to directional
/// route-carrier records, applying the six aggregation filters in order:
/// premium-class rule, $20 fare floor, 100-passenger floor, 99th percentile
/// fare trim, Southwest-at-DFW exclusion and the ten-route network floor.
///
/// Counts in the returned log are in itineraries.
pub fn aggregate_db1b(
    itineraries: &[Itinerary],
    quarter: Quarter,
    cfg: &IngestConfig,
) -> (Vec<Db1bAggregate>, FilterLog) {
    let mut log = FilterLog::default();
    let mut itins: Vec<Itinerary> = itineraries
        .iter()
        .filter(|i| i.quarter == quarter)
        .cloned()
        .collect();
    log.record("db1b.quarter", itineraries.len(), itins.len());

    let share = carrier_premium_share(&itins);
    let keep_all: BTreeSet<String> = share
        .iter()
        .filter(|(_, s)| **s > cfg.premium_share_threshold)
        .map(|(c, _)| c.to_string())
        .collect();
    let n = itins.len();
    itins.retain(|i| !i.fare_class.is_premium() || keep_all.contains(&i.carrier));
    log.record("db1b.coach_class", n, itins.len());

    let n = itins.len();
    itins.retain(|i| i.nominal_fare >= cfg.min_fare);
    log.record("db1b.frequent_flyer", n, itins.len());

    let mut groups: BTreeMap<GroupKey, Vec<Itinerary>> = BTreeMap::new();
    for it in itins {
        groups.entry(group_key(&it)).or_default().push(it);
    }
    let count = |g: &BTreeMap<GroupKey, Vec<Itinerary>>| g.values().map(Vec::len).sum::<usize>();

    let n = count(&groups);
    groups.retain(|_, v| {
        v.iter().map(|i| i.passengers as u64).sum::<u64>() >= cfg.min_db1b_passengers
    });
    log.record("db1b.low_volume", n, count(&groups));

    let n = count(&groups);
    for v in groups.values_mut() {
        let mut obs: Vec<FareObservation> = v
            .iter()
            .map(|i| FareObservation {
                fare: i.nominal_fare,
                passengers: i.passengers,
            })
            .collect();
        obs.sort_by(|a, b| a.fare.total_cmp(&b.fare));
        if let Some(cut) = nearest_rank(&obs, cfg.fare_trim_percentile) {
            v.retain(|i| i.nominal_fare <= cut);
        }
    }
    log.record("db1b.very_high_fares", n, count(&groups));

    let n = count(&groups);
    for v in groups.values_mut() {
        v.retain(|i| !is_southwest_dfw(i));
    }
    groups.retain(|_, v| !v.is_empty());
    log.record("db1b.southwest_dfw", n, count(&groups));

    let mut routes: BTreeMap<&str, BTreeSet<Route>> = BTreeMap::new();
    for (carrier, o, d) in groups.keys() {
        routes
            .entry(carrier.as_str())
            .or_default()
            .insert(Route::new(o.as_str(), d.as_str()));
    }
    let small: BTreeSet<String> = routes
        .iter()
        .filter(|(_, r)| r.len() < cfg.min_routes_per_carrier)
        .map(|(c, _)| c.to_string())
        .collect();
    let n = count(&groups);
    groups.retain(|(c, _, _), _| !small.contains(c));
    log.record("db1b.small_network", n, count(&groups));

    let aggs = groups
        .into_iter()
        .map(|((carrier, origin, destination), v)| {
            let passengers: u64 = v.iter().map(|i| i.passengers as u64).sum();
            let distance = v
                .iter()
                .map(|i| i.one_way_distance * i.passengers as f64)
                .sum::<f64>()
                / passengers as f64;
            let mut fares: Vec<FareObservation> = v
                .iter()
                .map(|i| FareObservation {
                    fare: i.nominal_fare,
                    passengers: i.passengers,
                })
                .collect();
            fares.sort_by(|a, b| a.fare.total_cmp(&b.fare));
            Db1bAggregate {
                carrier,
                origin,
                destination,
                quarter,
                passengers,
                fares,
                distance,
            }
        })
        .collect();
    (aggs, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FareClass;

    fn q() -> Quarter {
        Quarter::new(2022, 1).unwrap()
    }

    fn itin(id: usize, carrier: &str, o: &str, d: &str, fare: f64, pax: u32) -> Itinerary {
        Itinerary {
            itinerary_id: id.to_string(),
            carrier: carrier.into(),
            origin: o.into(),
            destination: d.into(),
            fare_class: FareClass::Coach,
            passengers: pax,
            one_way_distance: 500.0,
            nominal_fare: fare,
            quarter: q(),
        }
    }

    /// Ten routes from HUB, each with `pax` passengers at $200.
    fn network(carrier: &str, routes: usize, pax: u32) -> Vec<Itinerary> {
        (0..routes)
            .map(|r| itin(r, carrier, "HUB", &format!("S{r:02}"), 200.0, pax))
            .collect()
    }

    #[test]
    fn nearest_rank_percentiles() {
        let obs: Vec<FareObservation> = (1..=100)
            .map(|f| FareObservation {
                fare: f as f64,
                passengers: 1,
            })
            .collect();
        assert_eq!(nearest_rank(&obs, 99.0), Some(99.0));
        assert_eq!(nearest_rank(&obs, 10.0), Some(10.0));
        assert_eq!(nearest_rank(&obs, 0.0), Some(1.0));
        assert_eq!(nearest_rank(&obs, 100.0), Some(100.0));
        let weighted = [
            FareObservation { fare: 10.0, passengers: 3 },
            FareObservation { fare: 20.0, passengers: 1 },
        ];
        assert_eq!(nearest_rank(&weighted, 75.0), Some(10.0));
        assert_eq!(nearest_rank(&weighted, 76.0), Some(20.0));
        assert_eq!(nearest_rank(&[], 50.0), None);
    }

    #[test]
    fn fare_floor_is_inclusive_at_twenty() {
        let mut its = network("AA", 10, 100);
        its.push(itin(100, "AA", "HUB", "S00", 19.0, 1));
        its.push(itin(101, "AA", "HUB", "S00", 20.0, 1));
        let (aggs, log) = aggregate_db1b(&its, q(), &IngestConfig::default());
        assert_eq!(log.get("db1b.frequent_flyer").unwrap().dropped, 1);
        let s00 = aggs.iter().find(|a| a.destination == "S00").unwrap();
        assert_eq!(s00.passengers, 101);
        assert_eq!(s00.fares[0].fare, 20.0);
    }

    #[test]
    fn low_volume_boundary() {
        let mut its = network("AA", 10, 100);
        its.push(itin(200, "AA", "HUB", "S10", 200.0, 99));
        let (aggs, log) = aggregate_db1b(&its, q(), &IngestConfig::default());
        assert_eq!(aggs.len(), 10);
        assert_eq!(log.get("db1b.low_volume").unwrap().dropped, 1);
    }

    #[test]
    fn small_networks_are_dropped() {
        let mut its = network("AA", 10, 100);
        its.extend(network("B6", 9, 100));
        let (aggs, log) = aggregate_db1b(&its, q(), &IngestConfig::default());
        assert!(aggs.iter().all(|a| a.carrier == "AA"));
        assert_eq!(aggs.len(), 10);
        assert_eq!(log.get("db1b.small_network").unwrap().dropped, 9);
    }

    #[test]
    fn premium_rule_is_carrier_level() {
        let mut its = network("AA", 10, 100);
        for (i, it) in its.iter_mut().enumerate() {
            if i < 8 {
                it.fare_class = FareClass::First;
            }
        }
        let (aggs, _) = aggregate_db1b(&its, q(), &IngestConfig::default());
        // 80% premium: all classes kept.
        assert_eq!(aggs.len(), 10);

        let mut its = network("AA", 12, 100);
        for it in its.iter_mut().take(2) {
            it.fare_class = FareClass::Business;
        }
        let (aggs, log) = aggregate_db1b(&its, q(), &IngestConfig::default());
        assert_eq!(log.get("db1b.coach_class").unwrap().dropped, 2);
        assert_eq!(aggs.len(), 10);
    }

    #[test]
    fn top_percentile_fares_are_trimmed() {
        let mut its = network("AA", 10, 100);
        // 199 tickets at $100 and one at $5000 on S00 -> p99 is $100.
        its[0] = itin(0, "AA", "HUB", "S00", 100.0, 199);
        its.push(itin(300, "AA", "HUB", "S00", 5000.0, 1));
        let (aggs, log) = aggregate_db1b(&its, q(), &IngestConfig::default());
        assert_eq!(log.get("db1b.very_high_fares").unwrap().dropped, 1);
        let s00 = aggs.iter().find(|a| a.destination == "S00").unwrap();
        assert_eq!(s00.fares.last().unwrap().fare, 100.0);
    }

    #[test]
    fn southwest_dfw_before_2000() {
        let early = Quarter::new(1999, 4).unwrap();
        let mut its: Vec<Itinerary> = network("WN", 11, 100);
        its[0].destination = "DFW".into();
        for it in its.iter_mut() {
            it.quarter = early;
        }
        let (aggs, log) = aggregate_db1b(&its, early, &IngestConfig::default());
        assert_eq!(log.get("db1b.southwest_dfw").unwrap().dropped, 1);
        assert_eq!(aggs.len(), 10);
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let (aggs, log) = aggregate_db1b(&[], q(), &IngestConfig::default());
        assert!(aggs.is_empty());
        assert!(log.stages.iter().all(|s| s.dropped == 0));
    }
}
