use nalgebra::{DMatrix, DVector};

use super::qr::{norm, scale_rows, Estimate, SequentialQr};
use super::{Design, RANK_TOLERANCE};
use crate::error::Result;

/// Exact weighted projection off the span of carrier-route and quarter
/// dummies.
///
/// Group effects are eliminated in closed form, leaving the quarter effects
/// to solve `S δ = b` with `S = diag(W_t) − Cᵀ diag(1/W_g) C`, where `C`
/// holds the weight of each group-quarter cell. `S` is singular along one
/// direction per connected component of the group-quarter graph; its
/// pseudo-inverse picks one solution and the fitted effects are unique.
pub(crate) struct Absorber<'a> {
    groups: &'a [usize],
    periods: &'a [usize],
    w: &'a DVector<f64>,
    n_groups: usize,
    n_periods: usize,
    group_weight: Vec<f64>,
    cell: Vec<f64>,
    s_pinv: DMatrix<f64>,
    pub components: usize,
}

impl<'a> Absorber<'a> {
    pub fn new(groups: &'a [usize], periods: &'a [usize], w: &'a DVector<f64>) -> Self {
        let g = groups.iter().max().map_or(0, |m| m + 1);
        let t = periods.iter().max().map_or(0, |m| m + 1);
        let mut group_weight = vec![0.0; g];
        let mut period_weight = vec![0.0; t];
        let mut cell = vec![0.0; g * t];
        for i in 0..groups.len() {
            group_weight[groups[i]] += w[i];
            period_weight[periods[i]] += w[i];
            cell[groups[i] * t + periods[i]] += w[i];
        }
        let mut s = DMatrix::from_diagonal(&DVector::from_vec(period_weight));
        for gi in 0..g {
            let row = &cell[gi * t..(gi + 1) * t];
            for (a, &ca) in row.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                for (b, &cb) in row.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                    s[(a, b)] -= ca * cb / group_weight[gi];
                }
            }
        }
        let eig = s.symmetric_eigen();
        let top = eig.eigenvalues.amax();
        let mut inv = DMatrix::zeros(t, t);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 1e-11 * top {
                let v = eig.eigenvectors.column(k);
                inv += (v * v.transpose()) / lambda;
            }
        }
        Absorber {
            groups,
            periods,
            w,
            n_groups: g,
            n_periods: t,
            group_weight,
            cell,
            s_pinv: inv,
            components: components(groups, periods, g, t),
        }
    }

    /// Rank of the intercept-plus-dummies block.
    pub fn rank(&self) -> usize {
        self.n_groups + self.n_periods - self.components
    }

    fn project_once(&self, v: &mut [f64]) {
        let (g, t) = (self.n_groups, self.n_periods);
        let mut sg = vec![0.0; g];
        let mut st = vec![0.0; t];
        for i in 0..v.len() {
            sg[self.groups[i]] += self.w[i] * v[i];
            st[self.periods[i]] += self.w[i] * v[i];
        }
        for gi in 0..g {
            let mean = sg[gi] / self.group_weight[gi];
            for (b, c) in st.iter_mut().zip(&self.cell[gi * t..(gi + 1) * t]) {
                *b -= c * mean;
            }
        }
        let delta = &self.s_pinv * DVector::from_vec(st);
        let alpha: Vec<f64> = (0..g)
            .map(|gi| {
                let cross: f64 = self.cell[gi * t..(gi + 1) * t]
                    .iter()
                    .zip(delta.iter())
                    .map(|(c, d)| c * d)
                    .sum();
                (sg[gi] - cross) / self.group_weight[gi]
            })
            .collect();
        for i in 0..v.len() {
            v[i] -= alpha[self.groups[i]] + delta[self.periods[i]];
        }
    }

    /// Residual of `v` after the weighted projection; a second pass cleans
    /// up rounding left by the first.
    pub fn residualize(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.as_slice().to_vec();
        self.project_once(&mut out);
        self.project_once(&mut out);
        DVector::from_vec(out)
    }
}

fn components(groups: &[usize], periods: &[usize], g: usize, t: usize) -> usize {
    let mut parent: Vec<usize> = (0..g + t).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (&a, &b) in groups.iter().zip(periods) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, g + b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..g + t).filter(|&x| find(&mut parent, x) == x).count()
}

pub(crate) fn solve(d: &Design) -> Result<Estimate> {
    let abs = Absorber::new(&d.groups, &d.periods, &d.w);
    let y = abs.residualize(&d.y);
    let mut x = d.x.clone();
    for j in 0..x.ncols() {
        let r = abs.residualize(&d.x.column(j).into_owned());
        x.set_column(j, &r);
    }
    let reference: Vec<f64> = scale_rows(&d.x, &d.w)
        .column_iter()
        .map(|c| norm(c.as_slice()))
        .collect();
    let qr = SequentialQr::with_reference(&scale_rows(&x, &d.w), Some(&reference), RANK_TOLERANCE);
    let sw = d.w.map(f64::sqrt);
    let beta = qr.solve(&y.component_mul(&sw));
    let scores_x = x.select_columns(&qr.kept);
    let residuals = &y - &scores_x * &beta;
    Ok(Estimate {
        names: qr.kept.iter().map(|&j| d.names[j].clone()).collect(),
        dropped: qr.dropped.iter().map(|&j| d.names[j].clone()).collect(),
        report: (0..qr.rank()).collect(),
        bread: qr.bread(),
        fe_rank: abs.rank(),
        beta,
        scores_x,
        residuals,
    })
}
