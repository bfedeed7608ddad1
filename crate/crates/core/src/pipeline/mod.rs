//! Stage orchestration shared by the command line and the bindings.
//!
//! Each stage reads the previous stage's CSV output, so the stages can be
//! run one at a time or all at once through [`run_all`].

mod selftest;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use selftest::{selftest, Check, SelftestReport};

use crate::error::{Error, Result};
use crate::ingest::{
    aggregate_db1b, aggregate_t100, attach_temperature, merge_itineraries, merge_supply_demand,
    parse_coupon, parse_t100, parse_ticket, write_rcq_csv, AirportStates, CpiSeries, FilterLog,
    open, IngestConfig, RouteCarrierQuarter, RowError, StateTemperatures,
};
use crate::netgraph::{
    carrier_networks, write_edge_measures_csv, write_global_measures_csv, write_node_measures_csv,
    CarrierNetwork, ComponentPolicy, MeasureIndex,
};
use crate::panelfit::{fit, write_fit_csv, FitResult, RegressionSpec};
use crate::quarter::Quarter;
use crate::report::{emit_histograms, emit_table, event_curve_csv};
use crate::threatscan::{
    build_panel, detect_threats, qualify_routes, write_panel_csv, write_threat_events_csv,
    EntrantHistory, PanelBuild, ThreatScan,
};

/// Output file names inside a run directory.
pub mod files {
    pub const RECORDS: &str = "records.csv";
    pub const FILTER_LOG: &str = "filter_log.csv";
    pub const ROW_ERRORS: &str = "row_errors.csv";
    pub const GLOBAL_MEASURES: &str = "global_measures.csv";
    pub const NODE_MEASURES: &str = "node_measures.csv";
    pub const EDGE_MEASURES: &str = "edge_measures.csv";
    pub const THREATS: &str = "threats.csv";
    pub const THREAT_REJECTS: &str = "threat_rejects.csv";
    pub const T0_HISTOGRAM: &str = "hist_t0.csv";
    pub const GAP_HISTOGRAM: &str = "hist_gap.csv";
    pub const PANEL: &str = "panel.csv";
}

/// Locations of the six raw inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPaths {
    pub coupon: PathBuf,
    pub ticket: PathBuf,
    pub t100: PathBuf,
    pub cpi: PathBuf,
    pub temperature: PathBuf,
    pub airports: PathBuf,
}

impl InputPaths {
    /// Conventional file names inside one directory.
    pub fn in_dir(dir: &Path) -> Self {
        InputPaths {
            coupon: dir.join("coupon.csv"),
            ticket: dir.join("ticket.csv"),
            t100: dir.join("t100.csv"),
            cpi: dir.join("cpi.csv"),
            temperature: dir.join("temperature.csv"),
            airports: dir.join("airport_state.csv"),
        }
    }

    pub fn all(&self) -> [&Path; 6] {
        [
            &self.coupon,
            &self.ticket,
            &self.t100,
            &self.cpi,
            &self.temperature,
            &self.airports,
        ]
    }

    /// Fail on the first path that does not exist.
    pub fn check(&self) -> Result<()> {
        for p in self.all() {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// A carrier code: two or three uppercase letters or digits.
pub fn valid_carrier(code: &str) -> bool {
    (2..=3).contains(&code.len())
        && code
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

/// Parse a flat `key=value` file. Blank lines and lines starting with `#`
/// are ignored; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Everything a full run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub entrant: String,
    pub base_quarter: Quarter,
    pub out_dir: PathBuf,
    pub specs: Vec<RegressionSpec>,
    pub policy: ComponentPolicy,
    pub ingest: IngestConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.inputs.check()?;
        if !valid_carrier(&self.entrant) {
            return Err(Error::Parse(format!("invalid entrant carrier code {:?}", self.entrant)));
        }
        Ok(())
    }
}

/// Result of the ingest stage.
#[derive(Debug, Clone, Default)]
pub struct IngestRun {
    pub records: Vec<RouteCarrierQuarter>,
    /// Per-stage counts with repeated stages (one per quarter) summed.
    pub log: FilterLog,
    pub coupon_errors: Vec<RowError>,
    pub ticket_errors: Vec<RowError>,
    pub t100_errors: Vec<RowError>,
    pub missing_temperature: usize,
}

/// Parse, filter, merge and deflate the raw inputs into route-carrier-quarter
/// records.
pub fn run_ingest(paths: &InputPaths, base_quarter: Quarter, cfg: &IngestConfig) -> Result<IngestRun> {
    paths.check()?;
    let coupons = parse_coupon(open(&paths.coupon)?, cfg)?;
    let tickets = parse_ticket(open(&paths.ticket)?)?;
    let mut log = FilterLog::default();
    log.extend(coupons.log);
    log.extend(tickets.log);
    let (itins, merge_log) = merge_itineraries(&coupons.itineraries, &tickets.tickets);
    log.extend(merge_log);

    let quarters: BTreeSet<Quarter> = itins.iter().map(|i| i.quarter).collect();
    let mut db1b = Vec::new();
    for q in quarters {
        let (aggs, l) = aggregate_db1b(&itins, q, cfg);
        log.extend(l);
        db1b.extend(aggs);
    }

    let (segments, t100_errors, l) = parse_t100(open(&paths.t100)?)?;
    log.extend(l);
    let (t100, l) = aggregate_t100(&segments, cfg);
    log.extend(l);

    let cpi = CpiSeries::from_csv(open(&paths.cpi)?, base_quarter)?;
    let (mut records, l) = merge_supply_demand(&db1b, &t100, &cpi)?;
    log.extend(l);

    let airports = AirportStates::from_csv(open(&paths.airports)?)?;
    let temps = StateTemperatures::from_csv(open(&paths.temperature)?)?;
    let missing_temperature = attach_temperature(&mut records, &airports, &temps);
    if missing_temperature > 0 {
        log::warn!("{missing_temperature} records have no temperature differential");
    }
    for (file, errs) in [
        ("coupon", &coupons.row_errors),
        ("ticket", &tickets.row_errors),
        ("t100", &t100_errors),
    ] {
        if !errs.is_empty() {
            log::warn!("{} malformed {file} rows skipped", errs.len());
        }
    }
    Ok(IngestRun {
        records,
        log: log.merged(),
        coupon_errors: coupons.row_errors,
        ticket_errors: tickets.row_errors,
        t100_errors,
        missing_temperature,
    })
}

/// Write records, the filter log and row errors into `dir`.
pub fn write_ingest(run: &IngestRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rcq_csv(&run.records, create(&dir.join(files::RECORDS))?)?;
    run.log.write_csv(create(&dir.join(files::FILTER_LOG))?)?;
    let mut wr = csv::Writer::from_writer(create(&dir.join(files::ROW_ERRORS))?);
    wr.write_record(["FILE", "LINE", "MESSAGE"])?;
    for (file, errs) in [
        ("coupon", &run.coupon_errors),
        ("ticket", &run.ticket_errors),
        ("t100", &run.t100_errors),
    ] {
        for e in errs {
            wr.write_record([file, &e.line.to_string(), &e.message])?;
        }
    }
    wr.flush().map_err(|e| Error::io(dir, e))
}

pub fn read_records(path: &Path) -> Result<Vec<RouteCarrierQuarter>> {
    crate::ingest::read_rcq_csv(open(path)?)
}

/// Build every carrier-quarter network and write the three measure tables.
pub fn write_networks(networks: &[CarrierNetwork], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_global_measures_csv(networks, create(&dir.join(files::GLOBAL_MEASURES))?)?;
    write_node_measures_csv(networks, create(&dir.join(files::NODE_MEASURES))?)?;
    write_edge_measures_csv(networks, create(&dir.join(files::EDGE_MEASURES))?)
}

/// Detect and qualify the entrant's threats.
pub fn run_threats(entrant: &str, records: &[RouteCarrierQuarter]) -> Result<ThreatScan> {
    if !valid_carrier(entrant) {
        return Err(Error::Parse(format!("invalid entrant carrier code {entrant:?}")));
    }
    let history = EntrantHistory::from_records(entrant, records)
        .ok_or_else(|| Error::Parse("no route-carrier-quarter records".into()))?;
    if history.quarters().all(|q| history.network(q).is_none_or(|n| n.routes.is_empty())) {
        log::warn!("entrant {entrant} serves no route in the sample");
    }
    Ok(qualify_routes(detect_threats(&history), records))
}

/// Write events, reject counts and both histograms into `dir`.
pub fn write_threats(scan: &ThreatScan, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_threat_events_csv(&scan.events, create(&dir.join(files::THREATS))?)?;
    let mut rejects = String::from("REASON,COUNT\n");
    for (reason, n) in &scan.rejects {
        rejects.push_str(&format!("{},{n}\n", reason.name()));
    }
    write_string(&dir.join(files::THREAT_REJECTS), &rejects)?;
    let (t0, gaps) = emit_histograms(&scan.events);
    write_string(&dir.join(files::T0_HISTOGRAM), &t0)?;
    write_string(&dir.join(files::GAP_HISTOGRAM), &gaps)
}

/// Build the estimation panel with measures from freshly built networks.
pub fn run_panel(
    scan: &ThreatScan,
    records: &[RouteCarrierQuarter],
    policy: ComponentPolicy,
) -> Result<PanelBuild> {
    let (networks, _) = carrier_networks(records, policy);
    let index = MeasureIndex::new(&networks);
    let panel = build_panel(&scan.events, records, &index)?;
    if panel.dropped_nonpositive > 0 {
        log::warn!("{} panel rows with a nonpositive outcome dropped", panel.dropped_nonpositive);
    }
    Ok(panel)
}

/// Fit file name for a spec, e.g. `fit_mean_fare.csv`.
pub fn fit_file_name(spec: &RegressionSpec) -> String {
    let mut name = format!("fit_{}", spec.outcome.name());
    if let Some(m) = spec.interaction {
        name.push('_');
        name.push_str(m.name());
    }
    name.push_str(".csv");
    name
}

/// Write a fit as the fit CSV plus its rendered table (`.txt` and
/// `_table.csv`) and event curve (`_curve.csv`).
pub fn write_fit(result: &FitResult, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(fit_file_name(&result.spec));
    let summary = result.summary();
    write_fit_csv(&summary, create(&path)?)?;
    let (text, csv) = emit_table(&summary)?;
    let stem = path.with_extension("");
    write_string(&stem.with_extension("txt"), &text)?;
    write_string(&PathBuf::from(format!("{}_table.csv", stem.display())), &csv)?;
    write_string(&PathBuf::from(format!("{}_curve.csv", stem.display())), &event_curve_csv(&summary)?)?;
    Ok(path)
}

/// Counts from a full run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub ingest: IngestRun,
    pub networks: usize,
    pub network_failures: usize,
    pub scan: ThreatScan,
    pub panel: PanelBuild,
    pub fits: Vec<FitResult>,
}

/// Ingest, networks, threats, panel and every requested fit, writing each
/// stage's outputs into `cfg.out_dir`.
pub fn run_all(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    let ingest = run_ingest(&cfg.inputs, cfg.base_quarter, &cfg.ingest)?;
    write_ingest(&ingest, out)?;
    let (networks, failures) = carrier_networks(&ingest.records, cfg.policy);
    write_networks(&networks, out)?;
    let scan = run_threats(&cfg.entrant, &ingest.records)?;
    write_threats(&scan, out)?;
    let index = MeasureIndex::new(&networks);
    let panel = build_panel(&scan.events, &ingest.records, &index)?;
    write_panel_csv(&panel.rows, create(&out.join(files::PANEL))?)?;
    let mut fits = Vec::with_capacity(cfg.specs.len());
    for spec in &cfg.specs {
        let result = fit(&panel.rows, spec)?;
        write_fit(&result, out)?;
        fits.push(result);
    }
    Ok(RunSummary {
        ingest,
        networks: networks.len(),
        network_failures: failures.len(),
        scan,
        panel,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = parse_config("# comment\n\nentrant = WN\nbase_quarter=2022Q1\nentrant=B6\n").unwrap();
        assert_eq!(cfg["entrant"], "B6");
        assert_eq!(cfg["base_quarter"], "2022Q1");
        assert!(parse_config("novalue\n").is_err());
    }

    #[test]
    fn carrier_codes() {
        assert!(valid_carrier("WN"));
        assert!(valid_carrier("9E"));
        assert!(!valid_carrier("wn"));
        assert!(!valid_carrier("SOUTHWEST"));
    }

    #[test]
    fn missing_input_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = InputPaths::in_dir(dir.path()).check().unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
