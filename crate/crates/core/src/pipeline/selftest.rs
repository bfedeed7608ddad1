//! Built-in consistency checks run by `entryscope selftest`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use super::{run_all, run_ingest, RunConfig};
use crate::error::Error;
use crate::ingest::{deflate, CpiSeries, IngestConfig};
use crate::netgraph::{build_graph, edge_measures, global_measures, node_measures, ComponentPolicy, Graph};
use crate::panelfit::{design_matrix, effect_at, effect_percent, fit, Control, CovarianceKind, RegressionSpec, SolverChoice};
use crate::synthgen::{
    illustrative_graph, boundary_fixture, brute_force_wls, staged_entry_scenario, gen_panel, generate_world, rng,
    simultaneous_scenario, PanelDgp, WorldConfig,
};
use crate::threatscan::{detect_threats, Outcome};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }
}

type Outcome_ = std::result::Result<String, String>;

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const NODE_TABLE: [[f64; 5]; 6] = [
    [0.4, 5.0 / 9.0, 0.0, 0.336, 3.5],
    [0.8, 5.0 / 6.0, 0.35, 0.549, 2.75],
    [0.6, 0.625, 0.05, 0.453, 3.0],
    [0.6, 5.0 / 7.0, 0.4, 0.383, 8.0 / 3.0],
    [0.6, 5.0 / 7.0, 0.1, 0.465, 10.0 / 3.0],
    [0.2, 5.0 / 11.0, 0.0, 0.129, 3.0],
];

const EDGE_TABLE: [(&str, &str, [f64; 6]); 8] = [
    ("1", "2", [7.0 / 30.0, 0.8, 5.0 / 6.0, 0.35, 0.549, 3.5]),
    ("1", "3", [0.1, 0.6, 0.625, 0.05, 0.453, 3.5]),
    ("2", "3", [2.0 / 15.0, 0.8, 5.0 / 6.0, 0.35, 0.549, 3.0]),
    ("2", "4", [1.0 / 3.0, 0.8, 5.0 / 6.0, 0.4, 0.549, 2.75]),
    ("2", "5", [0.1, 0.8, 5.0 / 6.0, 0.35, 0.549, 10.0 / 3.0]),
    ("3", "5", [1.0 / 6.0, 0.6, 5.0 / 7.0, 0.1, 0.465, 10.0 / 3.0]),
    ("4", "5", [0.2, 0.6, 5.0 / 7.0, 0.4, 0.465, 10.0 / 3.0]),
    ("4", "6", [1.0 / 3.0, 0.6, 5.0 / 7.0, 0.4, 0.383, 3.0]),
];

/// Eigenvector values are tabulated to three decimals.
const EIGEN_TOL: f64 = 5e-4;

fn illustrative_network() -> Outcome_ {
    let g = illustrative_graph();
    let gm = global_measures(&g);
    let want = [
        ("density", gm.density, 8.0 / 15.0),
        ("diameter", gm.diameter as f64, 3.0),
        ("avg_path_length", gm.avg_path_length, 1.6),
        ("transitivity", gm.transitivity, 0.5625),
        ("avg_clustering", gm.avg_clustering, 19.0 / 36.0),
        ("assortativity", gm.assortativity.unwrap_or(f64::NAN), -0.2),
    ];
    for (name, got, w) in want {
        ensure(close(got, w, 1e-9), || format!("{name}: {got} != {w}"))?;
    }
    let nm = node_measures(&g);
    for (i, row) in NODE_TABLE.iter().enumerate() {
        let v = g.index_of(&(i + 1).to_string()).ok_or("node missing")?;
        let m = &nm.nodes[v];
        let got = [m.degree, m.closeness, m.betweenness, m.eigenvector, m.avg_neighbour_degree];
        for (j, (&a, &b)) in got.iter().zip(row).enumerate() {
            let tol = if j == 3 { EIGEN_TOL } else { 1e-9 };
            ensure(close(a, b, tol), || format!("node {} column {j}: {a} != {b}", i + 1))?;
        }
    }
    let em = edge_measures(&g, &nm);
    for (a, b, row) in EDGE_TABLE {
        let (ia, ib) = (g.index_of(a).ok_or("node missing")?, g.index_of(b).ok_or("node missing")?);
        let e = &em.edges[g.edge_index(ia, ib).ok_or("edge missing")?];
        let got = [e.edge_betweenness, e.degree, e.closeness, e.betweenness, e.eigenvector, e.avg_neighbour_degree];
        for (j, (&x, &y)) in got.iter().zip(&row).enumerate() {
            let tol = if j == 4 { EIGEN_TOL } else { 1e-9 };
            ensure(close(x, y, tol), || format!("edge {a}-{b} column {j}: {x} != {y}"))?;
        }
    }
    Ok("global, node and edge tables match".into())
}

/// Random connected graph on `n` nodes: a random tree plus extra edges.
pub(crate) fn random_connected_graph(r: &mut crate::synthgen::Rng, n: usize) -> Graph {
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = r.random_range(0..v);
        edges.insert((u, v));
    }
    let p = r.random_range(0.0..0.6);
    for a in 0..n {
        for b in a + 1..n {
            if r.random_bool(p) {
                edges.insert((a, b));
            }
        }
    }
    build_graph(edges.into_iter().map(|(a, b)| (format!("n{a}"), format!("n{b}")))).expect("connected by construction")
}

/// Node and edge betweenness by listing every simple path between each
/// pair and keeping the shortest ones. Normalized like the library.
fn enumerated_betweenness(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    fn walk(g: &Graph, t: usize, path: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
        let v = *path.last().expect("path starts at the source");
        if v == t {
            found.push(path.clone());
            return;
        }
        for &u in g.neighbours(v) {
            if !path.contains(&u) {
                path.push(u);
                walk(g, t, path, found);
                path.pop();
            }
        }
    }
    let n = g.node_count();
    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; g.edge_count()];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths = Vec::new();
            walk(g, t, &mut vec![s], &mut paths);
            let shortest = paths.iter().map(Vec::len).min().expect("connected");
            paths.retain(|p| p.len() == shortest);
            let share = 1.0 / paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    node[v] += share;
                }
                for w in p.windows(2) {
                    edge[g.edge_index(w[0], w[1]).expect("path edge")] += share;
                }
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let inner = ((n - 1) * (n - 2) / 2) as f64;
    for b in &mut node {
        *b = if inner > 0.0 { *b / inner } else { 0.0 };
    }
    for b in &mut edge {
        *b /= pairs;
    }
    (node, edge)
}

fn betweenness_oracle(graphs: usize) -> Outcome_ {
    let mut r = rng(2024);
    for i in 0..graphs {
        let n = r.random_range(3..=8);
        let g = random_connected_graph(&mut r, n);
        let nm = node_measures(&g);
        let em = edge_measures(&g, &nm);
        let (node, edge) = enumerated_betweenness(&g);
        for (v, want) in node.iter().enumerate() {
            let got = nm.nodes[v].betweenness;
            ensure(close(got, *want, 1e-9), || format!("graph {i} node {v}: {got} != {want}"))?;
        }
        for (e, want) in edge.iter().enumerate() {
            let got = em.edges[e].edge_betweenness;
            ensure(close(got, *want, 1e-9), || format!("graph {i} edge {e}: {got} != {want}"))?;
        }
    }
    Ok(format!("{graphs} random graphs agree with path enumeration"))
}

/// A small panel with every bin populated; at most about 200 rows.
pub(crate) fn small_panel(seed: u64, noise_sd: f64) -> crate::synthgen::SyntheticPanel {
    (0..)
        .find_map(|k| {
            let mut r = rng(seed.wrapping_mul(7919).wrapping_add(k));
            let dgp = PanelDgp {
                routes: r.random_range(4..=6),
                incumbents: 1,
                quarters: r.random_range(31..=40),
                max_entry_gap: 6,
                noise_sd,
                beta_temp: 0.01,
                weight_range: (1.0, 50.0),
                seed: seed.wrapping_mul(31).wrapping_add(k),
                ..PanelDgp::default()
            };
            gen_panel(&dgp).ok()
        })
        .expect("some seed fills every bin")
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn estimator_oracle(panels: usize) -> Outcome_ {
    let mut worst_b: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for i in 0..panels {
        let panel = small_panel(i as u64, 0.05);
        let spec = RegressionSpec::new(Outcome::MeanFare)
            .with_controls(&[Control::TempDifferential])
            .with_solver(if i % 2 == 0 { SolverChoice::Within } else { SolverChoice::Dense });
        let res = fit(&panel.rows, &spec).map_err(|e| e.to_string())?;
        let design = design_matrix(&panel.rows, &spec).map_err(|e| e.to_string())?;
        let (full, names) = design.dense();
        let keep: Vec<usize> = (0..names.len()).filter(|&j| !res.dropped.contains(&names[j])).collect();
        let x = full.select_columns(&keep);
        let b = brute_force_wls(&x, &design.y, &design.w).map_err(|e| e.to_string())?;
        let names: Vec<&String> = keep.iter().map(|&j| &names[j]).collect();
        let resid = &design.y - &x * &b;
        let v = hand_cluster_covariance(&x, &design.w, &resid, &design.clusters);
        for (t, term) in res.terms.iter().enumerate() {
            let j = names.iter().position(|n| *n == term).ok_or(format!("{term} missing"))?;
            worst_b = worst_b.max(relative_gap(res.estimates[t], b[j]));
            for (s, other) in res.terms.iter().enumerate() {
                let l = names.iter().position(|n| *n == other).ok_or(format!("{other} missing"))?;
                let scale = (v[(j, j)] * v[(l, l)]).sqrt();
                worst_v = worst_v.max((res.covariance[(t, s)] - v[(j, l)]).abs() / scale);
            }
        }
    }
    ensure(worst_b <= 1e-8, || format!("coefficient gap {worst_b:e}"))?;
    ensure(worst_v <= 1e-10, || format!("covariance gap {worst_v:e}"))?;
    Ok(format!("{panels} panels, coefficient gap {worst_b:.1e}, covariance gap {worst_v:.1e}"))
}

/// `G/(G-1) (N-1)/(N-K) B (Σ_g s_g s_gᵀ) B` with scores `s_g = Σ w x e`.
fn hand_cluster_covariance(x: &DMatrix<f64>, w: &DVector<f64>, e: &DVector<f64>, clusters: &[usize]) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = x.row(i).transpose();
        gram += w[i] * &xi * xi.transpose();
    }
    let bread = gram.try_inverse().expect("full rank");
    let g = clusters.iter().max().map_or(0, |m| m + 1);
    let mut scores = vec![DVector::zeros(k); g];
    for i in 0..n {
        scores[clusters[i]] += x.row(i).transpose() * (w[i] * e[i]);
    }
    let meat = scores.iter().fold(DMatrix::zeros(k, k), |m, s| m + s * s.transpose());
    let c = g as f64 / (g as f64 - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    &bread * meat * &bread * c
}

fn noise_free_recovery() -> Outcome_ {
    let dgp = PanelDgp {
        noise_sd: 0.0,
        seed: 11,
        ..PanelDgp::default()
    };
    let panel = gen_panel(&dgp).map_err(|e| e.to_string())?;
    let res = fit(&panel.rows, &RegressionSpec::new(Outcome::MeanFare)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (t, term) in res.terms.iter().enumerate() {
        let truth = panel.truth.term(term).ok_or(format!("no truth for {term}"))?;
        worst = worst.max((res.estimates[t] - truth).abs());
    }
    ensure(worst <= 1e-10, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.1e}"))
}

fn threat_scenarios() -> Outcome_ {
    let staged = detect_threats(&staged_entry_scenario().history);
    let t0 = "2006Q1".parse().map_err(|e: Error| e.to_string())?;
    let te = "2008Q4".parse().map_err(|e: Error| e.to_string())?;
    ensure(
        staged.events.len() == 1 && staged.events[0].t0 == t0 && staged.events[0].te == te,
        || format!("expected one event 2006Q1 to 2008Q4, got {:?}", staged.events),
    )?;
    let simultaneous = detect_threats(&simultaneous_scenario().history);
    ensure(simultaneous.events.is_empty(), || "simultaneous entry produced an event".into())?;
    Ok("one event for the staged route, none for simultaneous entry".into())
}

fn effect_transforms() -> Outcome_ {
    let cases = [
        (effect_percent(-0.177), -16.2),
        (effect_percent(0.262), 30.0),
        (effect_percent(0.356), 42.8),
        (effect_at(0.224, 5.041, 0.02), 38.4),
        (effect_at(0.224, 5.041, 0.04), 53.1),
        (effect_at(-0.274, 0.987, 0.05), -20.1),
        (effect_at(-0.274, 0.987, 0.15), -11.8),
    ];
    for (got, want) in cases {
        ensure(close(got, want, 0.5), || format!("{got:.2} vs {want}"))?;
    }
    Ok(format!("{} transforms within 0.5 points", cases.len()))
}

fn ingest_boundaries(dir: &Path) -> Outcome_ {
    let (raw, expect) = boundary_fixture();
    let paths = raw.write(dir).map_err(|e| e.to_string())?;
    let run = run_ingest(&paths, raw.base_quarter, &IngestConfig::default()).map_err(|e| e.to_string())?;
    for &(stage, dropped) in &expect.stage_drops {
        let got = run.log.get(stage).map_or(usize::MAX, |s| s.dropped);
        ensure(got == dropped, || format!("{stage}: dropped {got}, expected {dropped}"))?;
    }
    let routes: BTreeSet<_> = run.records.iter().map(|r| (r.carrier.clone(), r.route.clone())).collect();
    let want: BTreeSet<_> = expect.routes.iter().cloned().collect();
    ensure(routes == want, || format!("surviving routes {routes:?}"))?;
    let cpi = CpiSeries::from_csv(raw.cpi.as_bytes(), expect.base_quarter).map_err(|e| e.to_string())?;
    let real = deflate(expect.nominal, expect.quarter, &cpi).map_err(|e| e.to_string())?;
    ensure(close(real, expect.real, 0.01), || format!("deflated {real:.4}"))?;
    Ok(format!("{} filter stages and deflation match", expect.stage_drops.len()))
}

fn synthetic_world(dir: &Path) -> Outcome_ {
    let raw = generate_world(&WorldConfig::default()).map_err(|e| e.to_string())?;
    let inputs = raw.write(&dir.join("raw")).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        inputs,
        entrant: raw.entrant.clone(),
        base_quarter: raw.base_quarter,
        out_dir: dir.join("out"),
        specs: vec![
            RegressionSpec::new(Outcome::MeanFare),
            RegressionSpec::new(Outcome::MeanFare).with_covariance(CovarianceKind::Robust),
        ],
        policy: ComponentPolicy::LargestComponent,
        ingest: IngestConfig::default(),
    };
    let summary = run_all(&cfg).map_err(|e| e.to_string())?;
    let got: Vec<_> = summary.scan.events.iter().map(|e| (&e.route, e.t0, e.te, &e.incumbents)).collect();
    let want: Vec<_> = raw.threats.iter().map(|t| (&t.route, t.t0, t.te, &t.incumbents)).collect();
    ensure(got == want, || format!("detected {} events, planted {}", got.len(), want.len()))?;
    let (a, b) = (&summary.fits[0], &summary.fits[1]);
    let gap = (&a.estimates - &b.estimates).amax();
    ensure(gap <= 1e-12, || format!("cluster and robust estimates differ by {gap:e}"))?;
    Ok(format!("{} threats recovered, {} panel rows", got.len(), summary.panel.rows.len()))
}

/// Run every check, writing fixture files under `fixtures_dir`.
pub fn selftest(fixtures_dir: &Path) -> SelftestReport {
    let boundary = fixtures_dir.join("boundary");
    let world = fixtures_dir.join("world");
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome_ + '_>)> = vec![
        ("illustrative network tables", Box::new(illustrative_network)),
        ("betweenness against path enumeration", Box::new(|| betweenness_oracle(100))),
        ("estimator against explicit inversion", Box::new(|| estimator_oracle(20))),
        ("noise-free recovery", Box::new(noise_free_recovery)),
        ("threat scenarios", Box::new(threat_scenarios)),
        ("effect transforms", Box::new(effect_transforms)),
        ("ingest boundaries", Box::new(|| ingest_boundaries(&boundary))),
        ("synthetic end-to-end", Box::new(|| synthetic_world(&world))),
    ];
    let mut report = SelftestReport::default();
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_millis();
        let (passed, detail) = match outcome {
            Ok(d) => (true, format!("{d} ({ms} ms)")),
            Err(d) => (false, format!("{d} ({ms} ms)")),
        };
        report.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
    report
}
