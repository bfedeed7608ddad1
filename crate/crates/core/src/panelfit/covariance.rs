use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::qr::{check_inputs, scale_rows, SequentialQr};
use super::RANK_TOLERANCE;
use crate::error::{Error, Result};

fn bread_of(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let qr = SequentialQr::new(&scale_rows(x, w), RANK_TOLERANCE);
    if !qr.dropped.is_empty() {
        return Err(Error::RankDeficient(
            qr.dropped.iter().map(|j| format!("column {j}")).collect(),
        ));
    }
    Ok(qr.bread())
}

fn dof_check(n: usize, k: usize) -> Result<()> {
    if n <= k {
        return Err(Error::TooFewObservations { n, k });
    }
    Ok(())
}

pub(crate) fn robust_with_bread(
    bread: &DMatrix<f64>,
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    e: &DVector<f64>,
    k: usize,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    dof_check(n, k)?;
    let mut scores = x.clone();
    for i in 0..n {
        scores.row_mut(i).scale_mut(w[i] * e[i]);
    }
    let meat = scores.transpose() * &scores;
    Ok(bread * meat * bread * (n as f64 / (n - k) as f64))
}

pub(crate) fn cluster_with_bread(
    bread: &DMatrix<f64>,
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    e: &DVector<f64>,
    clusters: &[usize],
    k: usize,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    dof_check(n, k)?;
    let mut sums: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for i in 0..n {
        let s = sums.entry(clusters[i]).or_insert_with(|| DVector::zeros(x.ncols()));
        s.axpy(w[i] * e[i], &x.row(i).transpose(), 1.0);
    }
    let g = sums.len();
    if g < 2 {
        return Err(Error::SingleCluster(g));
    }
    let mut meat = DMatrix::zeros(x.ncols(), x.ncols());
    for s in sums.values() {
        meat.ger(1.0, s, s, 1.0);
    }
    let scale = g as f64 / (g - 1) as f64 * (n - 1) as f64 / (n - k) as f64;
    Ok(bread * meat * bread * scale)
}

/// HC1 sandwich `N/(N−K) · B (Σ wᵢ²eᵢ² xᵢxᵢᵀ) B` with `B = (XᵀWX)⁻¹`.
/// `k` is the degrees-of-freedom count, which includes any absorbed fixed
/// effects.
pub fn covariance_robust(
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    residuals: &DVector<f64>,
    k: usize,
) -> Result<DMatrix<f64>> {
    check_inputs(x, residuals, w)?;
    robust_with_bread(&bread_of(x, w)?, x, w, residuals, k)
}

/// CR1 sandwich over cluster score sums `s_g = Σ_{i∈g} wᵢeᵢxᵢ`, scaled by
/// `G/(G−1) · (N−1)/(N−K)`.
pub fn covariance_cluster(
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    residuals: &DVector<f64>,
    clusters: &[usize],
    k: usize,
) -> Result<DMatrix<f64>> {
    check_inputs(x, residuals, w)?;
    if clusters.len() != x.nrows() {
        return Err(Error::Dimension(format!(
            "{} cluster ids for {} rows",
            clusters.len(),
            x.nrows()
        )));
    }
    cluster_with_bread(&bread_of(x, w)?, x, w, residuals, clusters, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_clusters_reduce_to_hc() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.1, 1.0, 0.7, 1.0, 1.9, 1.0, 3.2, 1.0, 4.0]);
        let w = DVector::from_vec(vec![1.0, 2.0, 1.0, 3.0, 1.0]);
        let e = DVector::from_vec(vec![0.2, -0.1, 0.05, -0.3, 0.15]);
        let hc = covariance_robust(&x, &w, &e, 2).unwrap();
        let cr = covariance_cluster(&x, &w, &e, &[0, 1, 2, 3, 4], 2).unwrap();
        // G = N: CR1 scale N/(N-1)·(N-1)/(N-K) = HC1 scale N/(N-K).
        assert!((hc - cr).amax() < 1e-15);
    }

    #[test]
    fn one_cluster_is_an_error() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let w = DVector::repeat(3, 1.0);
        let e = DVector::from_vec(vec![0.1, -0.1, 0.0]);
        let err = covariance_cluster(&x, &w, &e, &[7, 7, 7], 1).unwrap_err();
        assert!(matches!(err, Error::SingleCluster(1)));
    }
}
