//! Python bindings for the entryscope pipeline.
//!
//! Tabular results cross the boundary as plain lists and dicts; file-based
//! stages take and return paths.

use std::collections::BTreeMap;
use std::path::PathBuf;

use entryscope_core::ingest::IngestConfig;
use entryscope_core::netgraph::{
    build_graph_with, edge_measures, global_measures, node_measures, ComponentPolicy, Graph as CoreGraph,
    NetworkMeasure,
};
use entryscope_core::panelfit::{self, Control, CovarianceKind, FitResult, RegressionSpec, SolverChoice};
use entryscope_core::pipeline::{self, InputPaths, RunConfig};
use entryscope_core::report::{emit_table, event_curve_csv};
use entryscope_core::synthgen::{self, PanelDgp, PanelTruth};
use entryscope_core::threatscan::{read_panel_csv, write_panel_csv, Outcome, PanelObservation};
use entryscope_core::{Error, Quarter};
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(entryscope, EntryscopeError, PyException);

fn py_err(e: Error) -> PyErr {
    EntryscopeError::new_err(e.to_string())
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn create(path: &std::path::Path) -> PyResult<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| py_err(Error::io(path, e)))
}

fn open(path: &std::path::Path) -> PyResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| py_err(Error::io(path, e)))
}

/// An undirected route network with its centrality measures.
#[pyclass(name = "Graph", module = "entryscope")]
struct PyGraph {
    inner: CoreGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (edges, largest_component = false))]
    fn new(edges: Vec<(String, String)>, largest_component: bool) -> PyResult<Self> {
        let policy = if largest_component {
            ComponentPolicy::LargestComponent
        } else {
            ComponentPolicy::Strict
        };
        Ok(PyGraph {
            inner: build_graph_with(edges, policy).or_py()?,
        })
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        self.inner
            .edges()
            .iter()
            .map(|&(a, b)| (self.inner.label(a).to_string(), self.inner.label(b).to_string()))
            .collect()
    }

    fn global_measures(&self) -> BTreeMap<&'static str, Option<f64>> {
        let g = global_measures(&self.inner);
        BTreeMap::from([
            ("density", Some(g.density)),
            ("diameter", Some(f64::from(g.diameter))),
            ("avg_path_length", Some(g.avg_path_length)),
            ("transitivity", Some(g.transitivity)),
            ("avg_clustering", Some(g.avg_clustering)),
            ("assortativity", g.assortativity),
        ])
    }

    /// `{node: {measure: value}}`.
    fn node_measures(&self) -> BTreeMap<String, BTreeMap<&'static str, f64>> {
        let nm = node_measures(&self.inner);
        nm.nodes
            .iter()
            .enumerate()
            .map(|(v, m)| {
                (
                    self.inner.label(v).to_string(),
                    BTreeMap::from([
                        ("degree", m.degree),
                        ("closeness", m.closeness),
                        ("betweenness", m.betweenness),
                        ("eigenvector", m.eigenvector),
                        ("avg_neighbour_degree", m.avg_neighbour_degree),
                    ]),
                )
            })
            .collect()
    }

    /// `{(a, b): {measure: value}}` with `a < b`.
    fn edge_measures(&self) -> BTreeMap<(String, String), BTreeMap<&'static str, f64>> {
        let em = edge_measures(&self.inner, &node_measures(&self.inner));
        self.edges()
            .into_iter()
            .zip(&em.edges)
            .map(|(key, m)| {
                (
                    key,
                    BTreeMap::from([
                        ("edge_betweenness", m.edge_betweenness),
                        ("degree", m.degree),
                        ("closeness", m.closeness),
                        ("betweenness", m.betweenness),
                        ("eigenvector", m.eigenvector),
                        ("avg_neighbour_degree", m.avg_neighbour_degree),
                    ]),
                )
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Incumbent carrier-route-quarter observations ready for estimation.
#[pyclass(name = "Panel", module = "entryscope")]
struct PyPanel {
    rows: Vec<PanelObservation>,
    truth: Option<PanelTruth>,
}

#[pymethods]
impl PyPanel {
    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        Ok(PyPanel {
            rows: read_panel_csv(open(&path)?).or_py()?,
            truth: None,
        })
    }

    /// A panel with planted event-time effects.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, noise_sd = 0.05, routes = 49, incumbents = 2, quarters = 87, max_entry_gap = None))]
    fn synthetic(
        seed: u64,
        noise_sd: f64,
        routes: usize,
        incumbents: usize,
        quarters: usize,
        max_entry_gap: Option<i64>,
    ) -> PyResult<Self> {
        let default = PanelDgp::default();
        let dgp = PanelDgp {
            noise_sd,
            routes,
            incumbents,
            quarters,
            max_entry_gap: max_entry_gap.unwrap_or(default.max_entry_gap),
            ..default
        }
        .with_seed(seed);
        let panel = synthgen::gen_panel(&dgp).or_py()?;
        Ok(PyPanel {
            rows: panel.rows,
            truth: Some(panel.truth),
        })
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        write_panel_csv(&self.rows, create(&path)?).or_py()
    }

    /// Planted value of a term, for synthetic panels.
    fn truth(&self, term: &str) -> Option<f64> {
        self.truth.as_ref().and_then(|t| t.term(term))
    }

    fn __len__(&self) -> usize {
        self.rows.len()
    }

    fn __repr__(&self) -> String {
        format!("Panel(rows={})", self.rows.len())
    }
}

/// Estimates of one event-study regression.
#[pyclass(name = "Fit", module = "entryscope")]
struct PyFit {
    inner: FitResult,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn terms(&self) -> Vec<String> {
        self.inner.terms.clone()
    }

    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.estimates.iter().copied().collect()
    }

    #[getter]
    fn standard_errors(&self) -> Vec<f64> {
        (0..self.inner.terms.len()).map(|i| self.inner.se(i)).collect()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        self.inner
            .covariance
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    #[getter]
    fn r_squared(&self) -> Option<f64> {
        self.inner.r_squared
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn n_clusters(&self) -> usize {
        self.inner.n_clusters
    }

    #[getter]
    fn dropped(&self) -> Vec<String> {
        self.inner.dropped.clone()
    }

    /// `{term: (estimate, se, stars)}`.
    fn coefficients(&self) -> BTreeMap<String, (f64, f64, String)> {
        self.inner
            .summary()
            .rows
            .into_iter()
            .map(|r| (r.term, (r.estimate, r.se, r.stars)))
            .collect()
    }

    fn table(&self) -> PyResult<String> {
        Ok(emit_table(&self.inner.summary()).or_py()?.0)
    }

    fn event_curve(&self) -> PyResult<String> {
        event_curve_csv(&self.inner.summary()).or_py()
    }

    /// Write the fit, table and event-curve files into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<PathBuf> {
        pipeline::write_fit(&self.inner, &dir).or_py()
    }

    fn __repr__(&self) -> String {
        format!("Fit(outcome={}, n={}, terms={})", self.inner.spec.outcome.name(), self.inner.n, self.inner.terms.len())
    }
}

fn spec_from(
    outcome: &str,
    se: &str,
    interaction: Option<&str>,
    controls: Option<Vec<String>>,
    solver: &str,
) -> Result<RegressionSpec, Error> {
    let mut spec = RegressionSpec::new(outcome.parse::<Outcome>()?)
        .with_covariance(se.parse::<CovarianceKind>()?)
        .with_solver(solver.parse::<SolverChoice>()?);
    if let Some(m) = interaction {
        spec = spec.with_interaction(m.parse::<NetworkMeasure>()?);
    }
    if let Some(c) = controls {
        let c = c.iter().map(|s| s.parse::<Control>()).collect::<Result<Vec<_>, _>>()?;
        spec = spec.with_controls(&c);
    }
    Ok(spec)
}

/// Fit the event-study regression with carrier-route and quarter fixed effects.
#[pyfunction]
#[pyo3(signature = (panel, outcome = "mean_fare", se = "cluster", interaction = None, controls = None, solver = "auto"))]
fn fit(
    panel: &PyPanel,
    outcome: &str,
    se: &str,
    interaction: Option<&str>,
    controls: Option<Vec<String>>,
    solver: &str,
) -> PyResult<PyFit> {
    let spec = spec_from(outcome, se, interaction, controls, solver).or_py()?;
    Ok(PyFit {
        inner: panelfit::fit(&panel.rows, &spec).or_py()?,
    })
}

/// Percentage change `100 (exp(b) - 1)`.
#[pyfunction]
fn effect_percent(b: f64) -> f64 {
    panelfit::effect_percent(b)
}

/// Percentage change at network-measure value `z`.
#[pyfunction]
fn effect_at(gamma: f64, psi: f64, z: f64) -> f64 {
    panelfit::effect_at(gamma, psi, z)
}

/// Weighted least squares by explicit inversion of the normal equations.
#[pyfunction]
fn brute_force_wls(x: Vec<Vec<f64>>, y: Vec<f64>, w: Vec<f64>) -> PyResult<Vec<f64>> {
    let cols = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != cols) {
        return Err(py_err(Error::Dimension("ragged design rows".into())));
    }
    let xm = DMatrix::from_row_iterator(x.len(), cols, x.into_iter().flatten());
    let b = synthgen::brute_force_wls(&xm, &DVector::from_vec(y), &DVector::from_vec(w)).or_py()?;
    Ok(b.iter().copied().collect())
}

fn input_paths(dir: PathBuf) -> InputPaths {
    InputPaths::in_dir(&dir)
}

/// Run the ingest stage on the six files in `input_dir` and write the
/// records into `out_dir`. Returns `{stage: (input, retained)}`.
#[pyfunction]
fn ingest(input_dir: PathBuf, base_quarter: &str, out_dir: PathBuf) -> PyResult<BTreeMap<String, (usize, usize)>> {
    let base: Quarter = base_quarter.parse().or_py()?;
    let run = pipeline::run_ingest(&input_paths(input_dir), base, &IngestConfig::default()).or_py()?;
    pipeline::write_ingest(&run, &out_dir).or_py()?;
    Ok(run
        .log
        .stages
        .iter()
        .map(|s| (s.stage.clone(), (s.input(), s.retained)))
        .collect())
}

/// Detect threat events for `entrant` in a records CSV; writes the events
/// and histograms into `out_dir` and returns the events as dicts.
#[pyfunction]
fn threats(records: PathBuf, entrant: &str, out_dir: PathBuf) -> PyResult<Vec<BTreeMap<&'static str, String>>> {
    let recs = pipeline::read_records(&records).or_py()?;
    let scan = pipeline::run_threats(entrant, &recs).or_py()?;
    pipeline::write_threats(&scan, &out_dir).or_py()?;
    Ok(scan
        .events
        .iter()
        .map(|e| {
            BTreeMap::from([
                ("route", e.route.to_string()),
                ("t_s", e.t_s.to_string()),
                ("t0", e.t0.to_string()),
                ("te", e.te.to_string()),
                ("incumbents", e.incumbents.iter().cloned().collect::<Vec<_>>().join(";")),
            ])
        })
        .collect())
}

/// Ingest, networks, threats, panel and one fit per outcome, all written
/// into `out_dir`. Returns a summary dict.
#[pyfunction]
#[pyo3(signature = (input_dir, entrant, base_quarter, out_dir, outcomes = vec!["mean_fare".to_string()], largest_component = true))]
fn run_all(
    input_dir: PathBuf,
    entrant: String,
    base_quarter: &str,
    out_dir: PathBuf,
    outcomes: Vec<String>,
    largest_component: bool,
) -> PyResult<BTreeMap<&'static str, usize>> {
    let specs = outcomes
        .iter()
        .map(|o| o.parse::<Outcome>().map(RegressionSpec::new))
        .collect::<Result<Vec<_>, _>>()
        .or_py()?;
    let cfg = RunConfig {
        inputs: input_paths(input_dir),
        entrant,
        base_quarter: base_quarter.parse().or_py()?,
        out_dir,
        specs,
        policy: if largest_component {
            ComponentPolicy::LargestComponent
        } else {
            ComponentPolicy::Strict
        },
        ingest: IngestConfig::default(),
    };
    let s = pipeline::run_all(&cfg).or_py()?;
    Ok(BTreeMap::from([
        ("records", s.ingest.records.len()),
        ("networks", s.networks),
        ("threats", s.scan.events.len()),
        ("panel_rows", s.panel.rows.len()),
        ("fits", s.fits.len()),
    ]))
}

/// Write a synthetic set of raw input files into `dir`. Returns the entrant,
/// base quarter and planted threat routes.
#[pyfunction]
#[pyo3(signature = (dir, seed = 7))]
fn generate_world(dir: PathBuf, seed: u64) -> PyResult<(String, String, Vec<String>)> {
    let raw = synthgen::generate_world(&synthgen::WorldConfig {
        seed,
        ..synthgen::WorldConfig::default()
    })
    .or_py()?;
    raw.write(&dir).or_py()?;
    Ok((
        raw.entrant.clone(),
        raw.base_quarter.to_string(),
        raw.threats.iter().map(|t| t.route.to_string()).collect(),
    ))
}

/// Run the built-in checks; returns `(name, passed, detail)` triples.
#[pyfunction]
fn selftest(fixtures_dir: PathBuf) -> Vec<(String, bool, String)> {
    pipeline::selftest(&fixtures_dir)
        .checks
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

#[pymodule]
fn entryscope(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EntryscopeError", m.py().get_type::<EntryscopeError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPanel>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(effect_percent, m)?)?;
    m.add_function(wrap_pyfunction!(effect_at, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_wls, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add_function(wrap_pyfunction!(threats, m)?)?;
    m.add_function(wrap_pyfunction!(run_all, m)?)?;
    m.add_function(wrap_pyfunction!(generate_world, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
