use std::fmt::Write as _;

use super::world::{haversine_miles, state};
use super::RawFiles;
use crate::quarter::Quarter;
use crate::route::Route;

/// What the boundary fixture must produce after a full ingest run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryExpectation {
    /// Units dropped per stage, after merging repeated stage names.
    pub stage_drops: Vec<(&'static str, usize)>,
    pub coupon_row_errors: usize,
    pub ticket_row_errors: usize,
    pub t100_row_errors: usize,
    /// Carrier-routes left after every filter and the supply join.
    pub routes: Vec<(String, Route)>,
    /// `nominal` dollars in `quarter` equal `real` dollars in `base_quarter`.
    pub nominal: f64,
    pub quarter: Quarter,
    pub real: f64,
    pub base_quarter: Quarter,
}

struct Builder {
    coupon: String,
    ticket: String,
}

impl Builder {
    fn coupon_pair(&mut self, id: &str, c: (&str, &str), o: &str, d: &str, class: (&str, &str), pax: (u32, u32), far_state: &str, q: (i32, u8)) {
        let dist = haversine_miles(o, d);
        let (os, (y, qq)) = (state(o), q);
        let _ = writeln!(self.coupon, "{id},1,{o},{d},{},{},{},{},{dist},{os},{far_state},{y},{qq}", c.0, c.1, class.0, pax.0);
        let _ = writeln!(self.coupon, "{id},2,{d},{o},{},{},{},{},{dist},{far_state},{os},{y},{qq}", c.0, c.1, class.1, pax.1);
    }

    fn ticket(&mut self, id: &str, fare: &str, bulk: u8, distance_full: f64, pax: u32, q: (i32, u8)) {
        let _ = writeln!(self.ticket, "{id},{fare},{bulk},{distance_full},{},{},{pax}", q.0, q.1);
    }

    /// A clean round trip with a matching ticket.
    fn trip(&mut self, id: &str, carrier: &str, o: &str, d: &str, class: &str, pax: u32, fare: f64, q: (i32, u8)) {
        self.coupon_pair(id, (carrier, carrier), o, d, (class, class), (pax, pax), state(d), q);
        let rt = 2.0 * haversine_miles(o, d);
        self.ticket(id, &format!("{fare:.2}"), 0, rt, pax, q);
    }
}

const Q: (i32, u8) = (2012, 1);

/// Hand-built raw files that put one record on each side of every ingest
/// threshold, in quarter 2012Q1 with real fares in 2022Q1 dollars.
pub fn boundary_fixture() -> (RawFiles, BoundaryExpectation) {
    let mut b = Builder {
        coupon: "ITIN_ID,SEQ_NUM,ORIGIN,DEST,OP_CARRIER,TK_CARRIER,FARE_CLASS,PASSENGERS,DISTANCE,ORIGIN_STATE,DEST_STATE,YEAR,QUARTER\n".into(),
        ticket: "ITIN_ID,ITIN_FARE,BULK_FARE_UNRELIABLE,DISTANCE_FULL,YEAR,QUARTER,PASSENGERS\n".into(),
    };

    // UA: eleven routes out of DEN; SNA falls one passenger short of the
    // floor, leaving exactly ten.
    b.trip("ua-ord-a", "UA", "DEN", "ORD", "Y", 99, 300.0, Q);
    b.trip("ua-ord-b", "UA", "DEN", "ORD", "Y", 1, 20.0, Q);
    b.trip("ua-ord-c", "UA", "DEN", "ORD", "Y", 1, 19.0, Q);
    for i in 0..100 {
        b.trip(&format!("ua-lax-{i:03}"), "UA", "DEN", "LAX", "X", 1, 201.0 + i as f64, Q);
    }
    b.trip("ua-sfo-y", "UA", "DEN", "SFO", "Y", 100, 250.0, Q);
    b.trip("ua-sfo-c", "UA", "DEN", "SFO", "C", 5, 900.0, Q);
    for d in ["SEA", "PHX", "LAS", "ATL", "MSP", "DTW"] {
        b.trip(&format!("ua-{}", d.to_lowercase()), "UA", "DEN", d, "Y", 100, 250.0, Q);
    }
    let bos_rt = 2.0 * haversine_miles("DEN", "BOS");
    b.trip("ua-bos", "UA", "DEN", "BOS", "Y", 100, bos_rt, Q);
    b.trip("ua-sna", "UA", "DEN", "SNA", "Y", 99, 250.0, Q);

    // Coupon-level rejects.
    b.coupon_pair("bad-3seg", ("UA", "UA"), "DEN", "BOS", ("Y", "Y"), (1, 1), "MA", Q);
    let dist = haversine_miles("DEN", "BOS");
    let _ = writeln!(b.coupon, "bad-3seg,3,DEN,BOS,UA,UA,Y,1,{dist},CO,MA,2012,1");
    b.coupon_pair("bad-codeshare", ("UA", "AA"), "DEN", "BOS", ("Y", "Y"), (1, 1), "MA", Q);
    b.coupon_pair("bad-class", ("UA", "UA"), "DEN", "BOS", ("Y", "F"), (1, 1), "MA", Q);
    b.coupon_pair("bad-pax", ("UA", "UA"), "DEN", "BOS", ("Y", "Y"), (1, 2), "MA", Q);
    b.coupon_pair("bad-alaska", ("UA", "UA"), "DEN", "BOS", ("Y", "Y"), (1, 1), "AK", Q);
    b.coupon_pair("bad-foreign", ("BA", "BA"), "DEN", "BOS", ("Y", "Y"), (1, 1), "MA", Q);
    let _ = writeln!(b.coupon, "bad-row,1,DEN,BOS,UA,UA,Y,one,{dist},CO,MA,2012,1");

    // Ticket-level rejects; their coupons are clean.
    for id in ["bad-incredible", "bad-bulk", "bad-negative", "only-coupon", "dup-ticket", "mismatch-pax", "mismatch-dist", "mismatch-quarter", "near-dist"] {
        b.coupon_pair(id, ("UA", "UA"), "DEN", "BOS", ("Y", "Y"), (1, 1), "MA", Q);
    }
    b.ticket("bad-incredible", &format!("{:.2}", bos_rt + 0.01), 0, bos_rt, 1, Q);
    b.ticket("bad-bulk", "300.00", 1, bos_rt, 1, Q);
    b.ticket("bad-negative", "-300.00", 0, bos_rt, 1, Q);
    b.ticket("only-ticket", "300.00", 0, bos_rt, 1, Q);
    b.ticket("dup-ticket", "300.00", 0, bos_rt, 1, Q);
    b.ticket("dup-ticket", "310.00", 0, bos_rt, 1, Q);
    b.ticket("mismatch-pax", "300.00", 0, bos_rt, 3, Q);
    b.ticket("mismatch-dist", "300.00", 0, bos_rt + 2.0, 1, Q);
    b.ticket("mismatch-quarter", "300.00", 0, bos_rt, 1, (2012, 2));
    b.ticket("near-dist", "300.00", 0, bos_rt + 1.0, 1, Q);

    // DL: nine routes, one short of the network floor.
    for d in ["ORD", "LAX", "BOS", "MIA", "PHX", "BWI", "LAS", "MDW", "SEA"] {
        b.trip(&format!("dl-{}", d.to_lowercase()), "DL", "ATL", d, "Y", 100, 250.0, Q);
    }
    // B6 sells mostly first class and keeps it; NK sits exactly on the
    // premium share threshold and loses its first-class tickets.
    b.trip("b6-f", "B6", "BOS", "MIA", "F", 100, 400.0, Q);
    b.trip("b6-y", "B6", "BOS", "MIA", "Y", 10, 200.0, Q);
    b.trip("nk-f", "NK", "DEN", "LAS", "F", 75, 300.0, Q);
    b.trip("nk-y", "NK", "DEN", "LAS", "Y", 25, 100.0, Q);
    // Southwest at DFW: excluded in 1995, not in 2012.
    b.trip("wn-1995", "WN", "DFW", "IAH", "Y", 100, 120.0, (1995, 1));
    b.trip("wn-2012", "WN", "DFW", "IAH", "Y", 100, 120.0, Q);

    let mut t100 =
        String::from("CARRIER,ORIGIN,DEST,YEAR,MONTH,PASSENGERS,SEATS,SERVICE_CLASS,AIRCRAFT_CONFIG\n");
    t100.push_str("UA,DEN,ORD,2012,1,1000,1000,F,1\nUA,DEN,ORD,2012,2,1000,1000,F,1\n");
    t100.push_str("UA,DEN,LAX,2012,3,1999,3000,F,1\n");
    t100.push_str("UA,DEN,SFO,2012,3,2000,1999,F,1\n");
    for d in ["SEA", "PHX", "LAS", "BOS", "ATL", "MSP", "DTW"] {
        let _ = writeln!(t100, "UA,DEN,{d},2012,3,3000,4000,F,1");
    }
    t100.push_str("UA,ORD,DEN,2012,3,3000,4000,F,1\n");
    t100.push_str("UA,DEN,PHX,2012,2,500,600,F,2\n");
    t100.push_str("UA,DEN,PHX,2012,2,0,0,G,1\n");
    t100.push_str("UA,DEN,PHX,2012,2,120,150,L,1\n");
    t100.push_str("UA,DEN,PHX,2012,2,120,150,Z,1\n");

    let cpi = "YEAR,MONTH,INDEX\n2012,1,298.0\n2012,2,299.0\n2012,3,300.0\n\
               2022,1,370.0\n2022,2,373.0\n2022,3,376.0\n"
        .to_string();
    let mut temperature = String::from("STATE,YEAR,JAN_AVG_F\n");
    for (st, t) in [("AZ", 54.0), ("CA", 50.0), ("CO", 25.0), ("GA", 44.0), ("IL", 24.0), ("MA", 29.0), ("MI", 23.0), ("MN", 12.0), ("NV", 45.0), ("WA", 40.0)] {
        let _ = writeln!(temperature, "{st},2012,{t}");
    }
    let mut airports = String::from("AIRPORT,STATE\n");
    for code in ["ATL", "BOS", "BWI", "DEN", "DFW", "DTW", "IAH", "LAS", "LAX", "MDW", "MIA", "MSP", "ORD", "PHX", "SEA", "SFO", "SNA"] {
        let _ = writeln!(airports, "{code},{}", state(code));
    }

    let base_quarter = Quarter::new(2022, 1).expect("valid quarter");
    let raw = RawFiles {
        coupon: b.coupon,
        ticket: b.ticket,
        t100,
        cpi,
        temperature,
        airports,
        entrant: "WN".into(),
        base_quarter,
        threats: Vec::new(),
    };
    let expect = BoundaryExpectation {
        stage_drops: vec![
            ("coupon.malformed_rows", 1),
            ("coupon.duplicate_or_mixed_segments", 0),
            ("coupon.nonstop_round_trip", 1),
            ("coupon.no_codesharing", 1),
            ("coupon.fare_class_passengers", 2),
            ("coupon.domestic_routes", 1),
            ("coupon.no_cabotage", 1),
            ("ticket.malformed_rows", 1),
            ("ticket.credible_fare", 1),
            ("ticket.reliable_bulk_fare", 1),
            ("merge.duplicate_coupon_ids", 0),
            ("merge.duplicate_ticket_ids", 1),
            ("merge.in_both_sources", 5),
            ("merge.consistent_fields", 3),
            ("db1b.coach_class", 2),
            ("db1b.frequent_flyer", 1),
            ("db1b.low_volume", 2),
            ("db1b.very_high_fares", 1),
            ("db1b.southwest_dfw", 1),
            ("db1b.small_network", 12),
            ("t100.malformed_rows", 1),
            ("t100.domestic_scheduled", 3),
            ("t100.low_volume", 2),
            ("merge.db1b_in_t100", 2),
            ("merge.t100_in_db1b", 1),
        ],
        coupon_row_errors: 1,
        ticket_row_errors: 1,
        t100_row_errors: 1,
        routes: ["ATL", "BOS", "DTW", "LAS", "MSP", "ORD", "PHX", "SEA"]
            .iter()
            .map(|d| ("UA".to_string(), Route::new("DEN", *d)))
            .collect(),
        nominal: 300.0,
        quarter: Quarter::new(2012, 1).expect("valid quarter"),
        real: 376.0,
        base_quarter,
    };
    (raw, expect)
}
