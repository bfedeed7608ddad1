use nalgebra::{DMatrix, DVector};

use super::{Design, RANK_TOLERANCE};
use crate::error::{Error, Result};

/// Householder QR built one column at a time. A column whose remainder,
/// after the reflections of the columns already kept, is at most
/// `tol * ‖column‖` is dropped instead of being factored.
pub(crate) struct SequentialQr {
    n: usize,
    reflectors: Vec<(Vec<f64>, f64)>,
    r_cols: Vec<Vec<f64>>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl SequentialQr {
    pub fn new(a: &DMatrix<f64>, tol: f64) -> Self {
        Self::with_reference(a, None, tol)
    }

    /// As [`SequentialQr::new`], judging each column against `reference[j]`
    /// instead of its own norm.
    pub fn with_reference(a: &DMatrix<f64>, reference: Option<&[f64]>, tol: f64) -> Self {
        let n = a.nrows();
        let mut qr = SequentialQr {
            n,
            reflectors: Vec::new(),
            r_cols: Vec::new(),
            kept: Vec::new(),
            dropped: Vec::new(),
        };
        let mut v = vec![0.0; n];
        for j in 0..a.ncols() {
            v.copy_from_slice(a.column(j).as_slice());
            let original = reference.map_or_else(|| norm(&v), |r| r[j]);
            qr.reflect(&mut v);
            let r = qr.rank();
            let tail = norm(&v[r..]);
            if r >= n || tail <= tol * original || tail == 0.0 {
                qr.dropped.push(j);
                continue;
            }
            let alpha = if v[r] > 0.0 { -tail } else { tail };
            let mut u = v[r..].to_vec();
            u[0] -= alpha;
            let beta = 2.0 / dot(&u, &u);
            let mut col = v[..r].to_vec();
            col.push(alpha);
            qr.reflectors.push((u, beta));
            qr.r_cols.push(col);
            qr.kept.push(j);
        }
        qr
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    fn reflect(&self, v: &mut [f64]) {
        for (r, (u, beta)) in self.reflectors.iter().enumerate() {
            let s = beta * dot(u, &v[r..]);
            for (vi, ui) in v[r..].iter_mut().zip(u) {
                *vi -= s * ui;
            }
        }
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.n);
        let mut c = b.as_slice().to_vec();
        self.reflect(&mut c);
        let k = self.rank();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in i + 1..k {
                s -= self.r_cols[j][i] * x[j];
            }
            x[i] = s / self.r_cols[i][i];
        }
        DVector::from_vec(x)
    }

    /// `(AᵀA)⁻¹ = R⁻¹R⁻ᵀ` over the kept columns.
    pub fn bread(&self) -> DMatrix<f64> {
        let k = self.rank();
        let mut rinv = DMatrix::zeros(k, k);
        for c in 0..k {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in i + 1..=c {
                    s -= self.r_cols[j][i] * rinv[(j, c)];
                }
                rinv[(i, c)] = s / self.r_cols[i][i];
            }
        }
        &rinv * rinv.transpose()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    // Scaled to avoid overflow on large weights.
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * a.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

pub(crate) fn check_inputs(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() || y.len() != w.len() {
        return Err(Error::Dimension(format!(
            "X is {}x{}, y has {}, w has {}",
            x.nrows(),
            x.ncols(),
            y.len(),
            w.len()
        )));
    }
    if let Some((row, &weight)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidWeight { row, weight });
    }
    Ok(())
}

pub(crate) fn scale_rows(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut a = x.clone();
    for (i, wi) in w.iter().enumerate() {
        a.row_mut(i).scale_mut(wi.sqrt());
    }
    a
}

/// Weighted least-squares solution with its residuals and bread.
#[derive(Debug, Clone)]
pub struct WlsFit {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(XᵀWX)⁻¹`.
    pub bread: DMatrix<f64>,
}

/// Minimize `Σ wᵢ (yᵢ − xᵢᵀb)²`. Fails if `X` is rank deficient, naming the
/// offending columns by index.
pub fn fit_wls(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>) -> Result<WlsFit> {
    check_inputs(x, y, w)?;
    let qr = SequentialQr::new(&scale_rows(x, w), RANK_TOLERANCE);
    if !qr.dropped.is_empty() {
        return Err(Error::RankDeficient(
            qr.dropped.iter().map(|j| format!("column {j}")).collect(),
        ));
    }
    let sw = w.map(f64::sqrt);
    let coefficients = qr.solve(&y.component_mul(&sw));
    let fitted = x * &coefficients;
    Ok(WlsFit {
        residuals: y - &fitted,
        fitted,
        bread: qr.bread(),
        coefficients,
    })
}

/// What a solver hands to covariance and reporting.
pub(crate) struct Estimate {
    /// Regressor names kept, with estimates in `beta`.
    pub names: Vec<String>,
    pub beta: DVector<f64>,
    pub dropped: Vec<String>,
    /// Score design and bread over every kept column, fixed effects
    /// included for the dense solver.
    pub scores_x: DMatrix<f64>,
    pub bread: DMatrix<f64>,
    /// Positions of the reported regressors inside `scores_x`.
    pub report: Vec<usize>,
    pub residuals: DVector<f64>,
    /// Rank of the absorbed or expanded fixed-effect block.
    pub fe_rank: usize,
}

pub(crate) fn solve_dense(d: &Design) -> Result<Estimate> {
    let (x, names) = d.dense();
    let fe = d.fe_columns();
    let qr = SequentialQr::new(&scale_rows(&x, &d.w), RANK_TOLERANCE);
    let sw = d.w.map(f64::sqrt);
    let coef = qr.solve(&d.y.component_mul(&sw));
    let scores_x = x.select_columns(&qr.kept);
    let residuals = &d.y - &scores_x * &coef;
    let report: Vec<usize> = (0..qr.rank()).filter(|&p| qr.kept[p] >= fe).collect();
    let dropped: Vec<String> = qr
        .dropped
        .iter()
        .map(|&j| names[j].clone())
        .collect();
    for name in dropped.iter().filter(|n| n.starts_with("fe_")) {
        log::info!("fixed-effect column {name} is collinear and dropped");
    }
    Ok(Estimate {
        names: report.iter().map(|&p| names[qr.kept[p]].clone()).collect(),
        beta: DVector::from_iterator(report.len(), report.iter().map(|&p| coef[p])),
        dropped: dropped.into_iter().filter(|n| !n.starts_with("fe_")).collect(),
        fe_rank: qr.kept.iter().filter(|&&j| j < fe).count(),
        bread: qr.bread(),
        scores_x,
        report,
        residuals,
    })
}
