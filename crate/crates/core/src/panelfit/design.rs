use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{RegressionSpec, SolverChoice};
use crate::error::{Error, Result};
use crate::quarter::Quarter;
use crate::threatscan::{EventBin, PanelObservation};

/// Regressors, outcome, weights and fixed-effect structure of one fit.
///
/// `x` holds only the reported regressors; the fixed effects are kept as
/// group and period indices and expanded on demand by [`Design::dense`].
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w: DVector<f64>,
    /// Carrier-route index of each row into `group_labels`.
    pub groups: Vec<usize>,
    pub group_labels: Vec<String>,
    /// Quarter index of each row into `period_labels`.
    pub periods: Vec<usize>,
    pub period_labels: Vec<Quarter>,
    pub clusters: Vec<usize>,
    pub n_clusters: usize,
    /// Rows skipped for a missing measure or control.
    pub dropped_rows: usize,
}

fn interaction_name(bin: EventBin, measure: &str) -> String {
    format!("{}:{measure}", bin.label())
}

fn index_of<T: Ord + Clone>(values: impl Iterator<Item = T>) -> (Vec<T>, BTreeMap<T, usize>) {
    let map: BTreeMap<T, usize> = values.map(|v| (v, 0)).collect();
    let labels: Vec<T> = map.keys().cloned().collect();
    let map = labels.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    (labels, map)
}

/// Build the regression design: the fifteen bin indicators, optional
/// interactions with the network measure and its main effect, then the
/// controls. Rows missing a required measure or control are skipped.
pub fn design_matrix(panel: &[PanelObservation], spec: &RegressionSpec) -> Result<Design> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let rows: Vec<&PanelObservation> = panel
        .iter()
        .filter(|o| {
            spec.interaction.is_none_or(|m| o.measure(m).is_some())
                && spec.controls.iter().all(|c| c.value(o).is_some())
        })
        .collect();
    let dropped_rows = panel.len() - rows.len();
    if dropped_rows > 0 {
        log::warn!("{dropped_rows} panel rows lack a required measure or control and are skipped");
    }
    if rows.is_empty() {
        return Err(Error::EmptyPanel);
    }
    if !rows.iter().any(|o| o.bin == EventBin::Baseline) {
        return Err(Error::NoBaseline);
    }
    if rows.iter().all(|o| o.bin == EventBin::Baseline) {
        return Err(Error::AllBaseline);
    }
    for (i, o) in rows.iter().enumerate() {
        if !(o.weight.is_finite() && o.weight > 0.0) {
            return Err(Error::InvalidWeight { row: i, weight: o.weight });
        }
    }

    let mut names: Vec<String> = EventBin::INDICATORS.iter().map(|b| b.label()).collect();
    if let Some(m) = spec.interaction {
        names.extend(EventBin::INTERACTED.iter().map(|&b| interaction_name(b, m.name())));
        names.push(m.name().to_string());
    }
    names.extend(spec.controls.iter().map(|c| c.name().to_string()));

    let n = rows.len();
    let k = names.len();
    let mut x = DMatrix::zeros(n, k);
    for (i, o) in rows.iter().enumerate() {
        if let Some(j) = EventBin::INDICATORS.iter().position(|&b| b == o.bin) {
            x[(i, j)] = 1.0;
        }
        let mut col = EventBin::INDICATORS.len();
        if let Some(m) = spec.interaction {
            let z = o.measure(m).expect("filtered above");
            if let Some(j) = EventBin::INTERACTED.iter().position(|&b| b == o.bin) {
                x[(i, col + j)] = z;
            }
            col += EventBin::INTERACTED.len();
            x[(i, col)] = z;
            col += 1;
        }
        for c in &spec.controls {
            x[(i, col)] = c.value(o).expect("filtered above");
            col += 1;
        }
    }

    let y = DVector::from_iterator(n, rows.iter().map(|o| o.outcome(spec.outcome)));
    let w = DVector::from_iterator(n, rows.iter().map(|o| o.weight));
    let group_key = |o: &PanelObservation| format!("{}:{}", o.carrier, o.route);
    let (group_labels, gmap) = index_of(rows.iter().map(|o| group_key(o)));
    let (period_labels, pmap) = index_of(rows.iter().map(|o| o.quarter));
    let (cluster_labels, cmap) = index_of(rows.iter().map(|o| o.cluster_id.clone()));
    Ok(Design {
        names,
        x,
        y,
        w,
        groups: rows.iter().map(|o| gmap[&group_key(o)]).collect(),
        group_labels,
        periods: rows.iter().map(|o| pmap[&o.quarter]).collect(),
        period_labels,
        clusters: rows.iter().map(|o| cmap[&o.cluster_id]).collect(),
        n_clusters: cluster_labels.len(),
        dropped_rows,
    })
}

impl Design {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of intercept plus dummy columns in the full expansion.
    pub fn fe_columns(&self) -> usize {
        self.group_labels.len() + self.period_labels.len() - 1
    }

    /// Full expansion: intercept, carrier-route dummies (the
    /// lexicographically smallest omitted), quarter dummies (the earliest
    /// omitted), then the regressors. Names are returned alongside.
    pub fn dense(&self) -> (DMatrix<f64>, Vec<String>) {
        let n = self.n();
        let g = self.group_labels.len();
        let t = self.period_labels.len();
        let fe = self.fe_columns();
        let mut x = DMatrix::zeros(n, fe + self.x.ncols());
        let mut names = Vec::with_capacity(x.ncols());
        names.push("intercept".to_string());
        names.extend(self.group_labels[1..].iter().map(|l| format!("fe_route[{l}]")));
        names.extend(self.period_labels[1..].iter().map(|q| format!("fe_quarter[{q}]")));
        names.extend(self.names.iter().cloned());
        for i in 0..n {
            x[(i, 0)] = 1.0;
            if self.groups[i] > 0 {
                x[(i, self.groups[i])] = 1.0;
            }
            if self.periods[i] > 0 {
                x[(i, g - 1 + self.periods[i])] = 1.0;
            }
        }
        debug_assert_eq!(fe, g + t - 1);
        x.columns_mut(fe, self.x.ncols()).copy_from(&self.x);
        (x, names)
    }

    /// Dense QR while the expanded design stays small, within otherwise.
    pub fn preferred_solver(&self) -> SolverChoice {
        let p = (self.fe_columns() + self.x.ncols()) as f64;
        if self.n() as f64 * p * p <= 2.0e7 {
            SolverChoice::Dense
        } else {
            SolverChoice::Within
        }
    }
}
