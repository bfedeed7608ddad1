use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};

use super::covariance::{cluster_with_bread, robust_with_bread};
use super::qr::Estimate;
use super::{CovarianceKind, Design, RegressionSpec, SolverChoice};
use crate::error::{Error, Result};

/// `100(e^γ − 1)`: the percentage change implied by a log-point coefficient.
pub fn effect_percent(gamma: f64) -> f64 {
    100.0 * gamma.exp_m1()
}

/// Percentage effect of a bin at measure value `z` given its main
/// coefficient `gamma` and interaction `psi`.
pub fn effect_at(gamma: f64, psi: f64, z: f64) -> f64 {
    effect_percent(gamma + psi * z)
}

/// Two-sided normal significance stars at 90/95/99%.
pub fn stars(estimate: f64, se: f64) -> &'static str {
    if !(se > 0.0) || !estimate.is_finite() {
        return "";
    }
    let z = estimate.abs() / se;
    if z > 2.576 {
        "***"
    } else if z > 1.960 {
        "**"
    } else if z > 1.645 {
        "*"
    } else {
        ""
    }
}

/// Weighted `R² = 1 − SSR/SST` around the weighted mean of `y`.
pub fn r_squared(y: &DVector<f64>, fitted: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    let total: f64 = w.sum();
    let mean = y.dot(w) / total;
    let sst: f64 = y.iter().zip(w.iter()).map(|(yi, wi)| wi * (yi - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Err(Error::ZeroVariation);
    }
    let ssr: f64 = y
        .iter()
        .zip(fitted.iter())
        .zip(w.iter())
        .map(|((yi, fi), wi)| wi * (yi - fi).powi(2))
        .sum();
    Ok(1.0 - ssr / sst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub stars: String,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: RegressionSpec,
    pub solver: SolverChoice,
    pub terms: Vec<String>,
    pub estimates: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `None` when the outcome has no weighted variation.
    pub r_squared: Option<f64>,
    pub n: usize,
    /// Degrees-of-freedom count: reported regressors plus fixed-effect rank.
    pub k: usize,
    pub fe_rank: usize,
    pub n_clusters: usize,
    pub dropped: Vec<String>,
    pub dropped_rows: usize,
    pub residuals: DVector<f64>,
}

impl FitResult {
    pub fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn se(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    pub fn coefficient(&self, term: &str) -> Option<CoefRow> {
        self.index(term).map(|i| self.row(i))
    }

    fn row(&self, i: usize) -> CoefRow {
        let se = self.se(i);
        CoefRow {
            term: self.terms[i].clone(),
            estimate: self.estimates[i],
            se,
            stars: stars(self.estimates[i], se).to_string(),
        }
    }

    pub fn rows(&self) -> Vec<CoefRow> {
        (0..self.terms.len()).map(|i| self.row(i)).collect()
    }

    pub fn summary(&self) -> FitSummary {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("outcome", self.spec.outcome.name().to_string());
        put(
            "interaction",
            self.spec.interaction.map(|z| z.name()).unwrap_or("none").to_string(),
        );
        put(
            "controls",
            self.spec.controls.iter().map(|c| c.name()).collect::<Vec<_>>().join(";"),
        );
        put("covariance", self.spec.covariance.name().to_string());
        put(
            "small_sample",
            match self.spec.covariance {
                CovarianceKind::Robust => "HC1 N/(N-K)",
                CovarianceKind::Cluster => "CR1 G/(G-1)*(N-1)/(N-K)",
            }
            .to_string(),
        );
        put("solver", self.solver.name().to_string());
        put("n", self.n.to_string());
        put("k", self.k.to_string());
        put("fe_rank", self.fe_rank.to_string());
        put("clusters", self.n_clusters.to_string());
        put("r_squared", self.r_squared.map(|r| r.to_string()).unwrap_or_default());
        put("dropped", self.dropped.join(";"));
        put("dropped_rows", self.dropped_rows.to_string());
        FitSummary {
            metadata: m,
            rows: self.rows(),
        }
    }
}

pub(crate) fn assemble(
    spec: &RegressionSpec,
    solver: SolverChoice,
    d: &Design,
    est: Estimate,
) -> Result<FitResult> {
    for name in &est.dropped {
        log::warn!("column {name} is collinear with the fixed effects or earlier columns; dropped");
    }
    let n = d.n();
    let k = est.fe_rank + est.names.len();
    let full = match spec.covariance {
        CovarianceKind::Robust => robust_with_bread(&est.bread, &est.scores_x, &d.w, &est.residuals, k)?,
        CovarianceKind::Cluster => {
            cluster_with_bread(&est.bread, &est.scores_x, &d.w, &est.residuals, &d.clusters, k)?
        }
    };
    let covariance = full.select_rows(&est.report).select_columns(&est.report);
    let fitted = &d.y - &est.residuals;
    let r2 = match r_squared(&d.y, &fitted, &d.w) {
        Ok(r) => Some(r),
        Err(Error::ZeroVariation) => None,
        Err(e) => return Err(e),
    };
    Ok(FitResult {
        spec: spec.clone(),
        solver,
        terms: est.names,
        estimates: est.beta,
        covariance,
        r_squared: r2,
        n,
        k,
        fe_rank: est.fe_rank,
        n_clusters: d.n_clusters,
        dropped: est.dropped,
        dropped_rows: d.dropped_rows,
        residuals: est.residuals,
    })
}

/// A fit as stored on disk: metadata plus the coefficient rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitSummary {
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<CoefRow>,
}

impl FitSummary {
    pub fn get(&self, term: &str) -> Option<&CoefRow> {
        self.rows.iter().find(|r| r.term == term)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str).filter(|s| !s.is_empty())
    }

    pub fn r_squared(&self) -> Option<f64> {
        self.meta("r_squared")?.parse().ok()
    }

    pub fn n(&self) -> Option<usize> {
        self.meta("n")?.parse().ok()
    }

    pub fn covariance(&self) -> Option<CovarianceKind> {
        self.meta("covariance")?.parse().ok()
    }
}

/// `# key=value` metadata lines followed by `TERM,ESTIMATE,SE,STARS`.
pub fn write_fit_csv<W: Write>(fit: &FitSummary, mut w: W) -> Result<()> {
    for (k, v) in &fit.metadata {
        writeln!(w, "# {k}={v}").map_err(|e| Error::io("<fit csv>", e))?;
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["TERM", "ESTIMATE", "SE", "STARS"])?;
    for r in &fit.rows {
        wr.write_record([r.term.clone(), r.estimate.to_string(), r.se.to_string(), r.stars.clone()])?;
    }
    wr.flush().map_err(|e| Error::io("<fit csv>", e))
}

pub fn read_fit_csv<R: Read>(reader: R) -> Result<FitSummary> {
    let mut metadata = BTreeMap::new();
    let mut body = String::new();
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| Error::io("<fit csv>", e))?;
        match line.strip_prefix('#') {
            Some(meta) => {
                let (k, v) = meta
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("fit metadata line {line:?}")))?;
                metadata.insert(k.trim().to_string(), v.to_string());
            }
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }
    let mut table = crate::ingest::Table::new("fit", body.as_bytes(), &["TERM", "ESTIMATE", "SE", "STARS"], &[])?;
    let mut rows = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(format!("fit {e}")))?;
        let num = |i: usize, name: &str| row.parse::<f64>(i, name).map_err(|e| Error::Parse(format!("fit {e}")));
        rows.push(CoefRow {
            term: row.get(0).to_string(),
            estimate: num(1, "ESTIMATE")?,
            se: num(2, "SE")?,
            stars: row.get(3).to_string(),
        });
    }
    Ok(FitSummary { metadata, rows })
}
