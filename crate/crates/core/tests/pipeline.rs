use std::collections::BTreeSet;

use entryscope_core::ingest::{deflate, CpiSeries, IngestConfig};
use entryscope_core::netgraph::ComponentPolicy;
use entryscope_core::panelfit::{CovarianceKind, RegressionSpec};
use entryscope_core::threatscan::Outcome;
use entryscope_core::pipeline::{files, run_all, run_ingest, run_threats, RunConfig};
use entryscope_core::synthgen::{boundary_fixture, generate_world, WorldConfig};

#[test]
fn boundary_fixture_counts() {
    let (raw, expect) = boundary_fixture();
    let dir = tempfile::tempdir().unwrap();
    let paths = raw.write(dir.path()).unwrap();
    let run = run_ingest(&paths, raw.base_quarter, &IngestConfig::default()).unwrap();
    for &(stage, dropped) in &expect.stage_drops {
        let got = run.log.get(stage).unwrap_or_else(|| panic!("stage {stage} missing"));
        assert_eq!(got.dropped, dropped, "stage {stage}");
    }
    assert_eq!(run.coupon_errors.len(), expect.coupon_row_errors);
    assert_eq!(run.ticket_errors.len(), expect.ticket_row_errors);
    assert_eq!(run.t100_errors.len(), expect.t100_row_errors);
    let routes: BTreeSet<_> = run.records.iter().map(|r| (r.carrier.clone(), r.route.clone())).collect();
    let want: BTreeSet<_> = expect.routes.iter().cloned().collect();
    assert_eq!(routes, want);

    let cpi = CpiSeries::from_csv(raw.cpi.as_bytes(), expect.base_quarter).unwrap();
    let real = deflate(expect.nominal, expect.quarter, &cpi).unwrap();
    assert!((real - expect.real).abs() < 0.01, "{real}");
}

#[test]
fn synthetic_world_end_to_end() {
    let raw = generate_world(&WorldConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let inputs = raw.write(&dir.path().join("raw")).unwrap();
    let cfg = RunConfig {
        inputs,
        entrant: raw.entrant.clone(),
        base_quarter: raw.base_quarter,
        out_dir: dir.path().join("out"),
        specs: vec![
            RegressionSpec::new(Outcome::MeanFare),
            RegressionSpec::new(Outcome::MeanFare).with_covariance(CovarianceKind::Robust),
        ],
        policy: ComponentPolicy::LargestComponent,
        ingest: IngestConfig::default(),
    };
    let summary = run_all(&cfg).unwrap();

    let got: Vec<_> = summary
        .scan
        .events
        .iter()
        .map(|e| (e.route.clone(), e.t0, e.te, e.incumbents.clone()))
        .collect();
    let want: Vec<_> = raw
        .threats
        .iter()
        .map(|t| (t.route.clone(), t.t0, t.te, t.incumbents.clone()))
        .collect();
    assert_eq!(got, want);
    assert!(summary.panel.truncated > 0);

    let (cluster, robust) = (&summary.fits[0], &summary.fits[1]);
    assert_eq!(cluster.estimates.len(), robust.estimates.len());
    for (a, b) in cluster.estimates.iter().zip(robust.estimates.iter()) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(cluster.n, summary.panel.rows.len());

    for name in [
        files::RECORDS,
        files::FILTER_LOG,
        files::GLOBAL_MEASURES,
        files::NODE_MEASURES,
        files::EDGE_MEASURES,
        files::THREATS,
        files::PANEL,
        files::T0_HISTOGRAM,
    ] {
        assert!(cfg.out_dir.join(name).is_file(), "{name}");
    }
    let again = run_threats(&raw.entrant, &summary.ingest.records).unwrap();
    assert_eq!(again.events, summary.scan.events);
}
