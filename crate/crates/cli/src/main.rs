//! `entryscope` command-line driver.
//!
//! Every stage reads and writes CSV so stages can be chained by hand. Any
//! flag may also be given as `key=value` in a file passed with `--config`
//! (keys use underscores, e.g. `base_quarter`); flags win over the file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use entryscope_core::ingest::IngestConfig;
use entryscope_core::netgraph::{carrier_networks, ComponentPolicy};
use entryscope_core::panelfit::{fit, read_fit_csv, Control, CovarianceKind, RegressionSpec, SolverChoice};
use entryscope_core::pipeline::{
    files, parse_config, read_records, run_ingest, run_panel, run_threats, selftest, write_fit, write_ingest,
    write_networks, write_threats, InputPaths,
};
use entryscope_core::report::{emit_histograms, emit_table, event_curve_csv};
use entryscope_core::threatscan::{read_panel_csv, read_threat_events_csv, write_panel_csv, Outcome, ThreatScan};
use entryscope_core::{Error, Quarter};

/// Environment variable naming the directory selftest writes fixtures to.
const FIXTURES_ENV: &str = "ENTRYSCOPE_FIXTURES";

#[derive(Parser, Debug)]
#[command(name = "entryscope", version, about = "Entry-threat event studies on airline route networks")]
struct Cli {
    /// Flat key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse, filter and merge raw inputs into route-carrier-quarter records.
    Ingest {
        #[arg(long)]
        coupon: Option<PathBuf>,
        #[arg(long)]
        ticket: Option<PathBuf>,
        #[arg(long)]
        t100: Option<PathBuf>,
        #[arg(long)]
        cpi: Option<PathBuf>,
        #[arg(long)]
        temps: Option<PathBuf>,
        #[arg(long)]
        airports: Option<PathBuf>,
        #[arg(long)]
        base_quarter: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build carrier-quarter networks and write their measures.
    Networks {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep the largest component of disconnected networks.
        #[arg(long)]
        largest_component: bool,
    },
    /// Detect the entrant's threat events.
    Threats {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        entrant: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the incumbent estimation panel.
    Panel {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        threats: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        largest_component: bool,
    },
    /// Estimate one event-study regression.
    Fit {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        outcome: Option<String>,
        /// cluster or robust.
        #[arg(long)]
        se: Option<String>,
        #[arg(long)]
        interaction: Option<String>,
        /// Comma-separated control names.
        #[arg(long)]
        controls: Option<String>,
        /// auto, dense or within.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a fit or a threat file.
    Report {
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        threats: Option<PathBuf>,
        /// table, event_curve or histograms.
        #[arg(long)]
        kind: Option<String>,
        /// Output directory; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in oracle and fixture checks.
    Selftest,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Stage(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Stage(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flag values backed by the config file.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Settings(BTreeMap::new()));
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Settings(parse_config(&text)?))
    }

    fn string(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.0.get(key).cloned())
    }

    fn required(&self, flag: Option<String>, key: &str) -> CliResult<String> {
        self.string(flag, key)
            .ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
        self.required(flag.map(|p| p.to_string_lossy().into_owned()), key)
            .map(PathBuf::from)
    }

    fn parsed<T: FromStr<Err = Error>>(&self, flag: Option<String>, key: &str) -> CliResult<Option<T>> {
        self.string(flag, key)
            .map(|s| s.parse::<T>().map_err(|e| CliError::Usage(format!("--{}: {e}", key.replace('_', "-")))))
            .transpose()
    }

    fn flag(&self, set: bool, key: &str) -> bool {
        set || self.0.get(key).is_some_and(|v| matches!(v.as_str(), "1" | "true" | "yes"))
    }
}

fn policy(largest: bool) -> ComponentPolicy {
    if largest {
        ComponentPolicy::LargestComponent
    } else {
        ComponentPolicy::Strict
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))?)
}

fn open(path: &Path) -> CliResult<File> {
    Ok(File::open(path).map_err(|e| Error::io(path, e))?)
}

fn make_dir(dir: &Path) -> CliResult<()> {
    Ok(std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?)
}

fn emit(out: Option<&Path>, name: &str, body: &str) -> CliResult<()> {
    match out {
        Some(dir) => {
            make_dir(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            println!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest {
            coupon,
            ticket,
            t100,
            cpi,
            temps,
            airports,
            base_quarter,
            out,
        } => {
            let inputs = InputPaths {
                coupon: cfg.path(coupon, "coupon")?,
                ticket: cfg.path(ticket, "ticket")?,
                t100: cfg.path(t100, "t100")?,
                cpi: cfg.path(cpi, "cpi")?,
                temperature: cfg.path(temps, "temps")?,
                airports: cfg.path(airports, "airports")?,
            };
            let base: Quarter = cfg
                .parsed(base_quarter, "base_quarter")?
                .ok_or_else(|| CliError::Usage("missing --base-quarter".into()))?;
            let out = cfg.path(out, "out")?;
            let run = run_ingest(&inputs, base, &IngestConfig::default())?;
            write_ingest(&run, &out)?;
            for s in &run.log.stages {
                println!("{:<40} {:>10} -> {:>10}", s.stage, s.input(), s.retained);
            }
            println!("{} route-carrier-quarter records", run.records.len());
        }
        Command::Networks {
            records,
            out,
            largest_component,
        } => {
            let records = cfg.path(records, "records")?;
            let out = cfg.path(out, "out")?;
            let records = read_records(&records)?;
            let (networks, failures) = carrier_networks(&records, policy(cfg.flag(largest_component, "largest_component")));
            for (carrier, quarter, e) in &failures {
                log::warn!("{carrier} {quarter}: {e}");
            }
            write_networks(&networks, &out)?;
            println!("{} networks, {} skipped", networks.len(), failures.len());
        }
        Command::Threats { records, entrant, out } => {
            let records = cfg.path(records, "records")?;
            let entrant = cfg.required(entrant, "entrant")?;
            let out = cfg.path(out, "out")?;
            let records = read_records(&records)?;
            let scan = run_threats(&entrant, &records)?;
            write_threats(&scan, &out)?;
            println!("{} threat events", scan.events.len());
            for (reason, n) in &scan.rejects {
                println!("rejected {:<28} {n}", reason.name());
            }
        }
        Command::Panel {
            records,
            threats,
            out,
            largest_component,
        } => {
            let records = cfg.path(records, "records")?;
            let threats = cfg.path(threats, "threats")?;
            let out = cfg.path(out, "out")?;
            let records = read_records(&records)?;
            let events = read_threat_events_csv(open(&threats)?)?;
            let scan = ThreatScan {
                events,
                ..ThreatScan::default()
            };
            let panel = run_panel(&scan, &records, policy(cfg.flag(largest_component, "largest_component")))?;
            make_dir(&out)?;
            write_panel_csv(&panel.rows, create(&out.join(files::PANEL))?)?;
            println!(
                "{} panel rows, {} truncated after exit, {} nonpositive outcomes dropped",
                panel.rows.len(),
                panel.truncated,
                panel.dropped_nonpositive
            );
        }
        Command::Fit {
            panel,
            outcome,
            se,
            interaction,
            controls,
            solver,
            out,
        } => {
            let panel = cfg.path(panel, "panel")?;
            let outcome: Outcome = cfg
                .parsed(outcome, "outcome")?
                .ok_or_else(|| CliError::Usage("missing --outcome".into()))?;
            let mut spec = RegressionSpec::new(outcome);
            if let Some(kind) = cfg.parsed::<CovarianceKind>(se, "se")? {
                spec = spec.with_covariance(kind);
            }
            if let Some(m) = cfg.parsed(interaction, "interaction")? {
                spec = spec.with_interaction(m);
            }
            if let Some(list) = cfg.string(controls, "controls") {
                let parsed = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Control>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(format!("--controls: {e}")))?;
                spec = spec.with_controls(&parsed);
            }
            if let Some(s) = cfg.parsed::<SolverChoice>(solver, "solver")? {
                spec = spec.with_solver(s);
            }
            let rows = read_panel_csv(open(&panel)?)?;
            let result = fit(&rows, &spec)?;
            let (text, _) = emit_table(&result.summary())?;
            print!("{text}");
            if let Some(out) = cfg.string(out.map(|p| p.to_string_lossy().into_owned()), "out") {
                let path = write_fit(&result, Path::new(&out))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Report {
            fit,
            threats,
            kind,
            out,
        } => {
            let kind = cfg.required(kind, "kind")?;
            let out = cfg.string(out.map(|p| p.to_string_lossy().into_owned()), "out").map(PathBuf::from);
            match kind.as_str() {
                "table" | "event_curve" => {
                    let summary = read_fit_csv(open(&cfg.path(fit, "fit")?)?)?;
                    if kind == "table" {
                        let (text, csv) = emit_table(&summary)?;
                        emit(out.as_deref(), "table.txt", &text)?;
                        if out.is_some() {
                            emit(out.as_deref(), "table.csv", &csv)?;
                        }
                    } else {
                        emit(out.as_deref(), "event_curve.csv", &event_curve_csv(&summary)?)?;
                    }
                }
                "histograms" => {
                    let events = read_threat_events_csv(open(&cfg.path(threats, "threats")?)?)?;
                    let (t0, gaps) = emit_histograms(&events);
                    emit(out.as_deref(), files::T0_HISTOGRAM, &t0)?;
                    emit(out.as_deref(), files::GAP_HISTOGRAM, &gaps)?;
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "--kind must be table, event_curve or histograms, not {other:?}"
                    )))
                }
            }
        }
        Command::Selftest => {
            let dir = std::env::var_os(FIXTURES_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| std::env::temp_dir().join("entryscope-fixtures"));
            let report = selftest(&dir);
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{} passed, {} failed", report.passed(), report.failed());
            if !report.all_passed() {
                return Err(CliError::Stage(Error::Parse("selftest failed".into())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("For more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(CliError::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
