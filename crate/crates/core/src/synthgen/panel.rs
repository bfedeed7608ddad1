use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::rng;
use crate::error::{Error, Result};
use crate::netgraph::NetworkMeasure;
use crate::quarter::Quarter;
use crate::route::Route;
use crate::threatscan::{event_bin, EventBin, PanelObservation};

const CARRIERS: [&str; 8] = ["AA", "UA", "DL", "CO", "NW", "US", "AS", "HP"];

/// Entry-threat coefficients on the scale of the mean-fare column of the
/// main results table, in [`EventBin::INDICATORS`] order.
pub const DEFAULT_GAMMA: [f64; 15] = [
    0.016, -0.004, -0.030, -0.021, 0.009, -0.004, 0.010, 0.006, -0.033, -0.066, -0.083, -0.043,
    -0.177, -0.194, -0.197,
];

/// A planted `D × Z` interaction: one slope per [`EventBin::INTERACTED`] bin plus the
/// main effect of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInteraction {
    pub measure: NetworkMeasure,
    pub psi: [f64; 7],
    pub main: f64,
}

/// Parameters of the planted event-study panel.
///
/// Each route gets a threat at a random `t0` with entry `gap` quarters
/// later, and `incumbents` carriers observed over the full event window.
/// All eight outcomes share the planted coefficients and fixed effects and
/// differ only in their noise draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDgp {
    pub routes: usize,
    pub incumbents: usize,
    pub quarters: usize,
    pub first_quarter: Quarter,
    pub gamma: [f64; 15],
    pub interaction: Option<PlantedInteraction>,
    /// Coefficient on the temperature differential (drawn per route-year).
    pub beta_temp: f64,
    pub group_fe_sd: f64,
    pub quarter_fe_sd: f64,
    pub noise_sd: f64,
    /// Weights are drawn uniformly on this range and rounded.
    pub weight_range: (f64, f64),
    /// `te − t0` is drawn uniformly on `1..=max_entry_gap`.
    pub max_entry_gap: i64,
    pub seed: u64,
}

impl Default for PanelDgp {
    fn default() -> Self {
        PanelDgp {
            routes: 49,
            incumbents: 2,
            quarters: 87,
            first_quarter: Quarter::new(1993, 1).expect("valid quarter"),
            gamma: DEFAULT_GAMMA,
            interaction: None,
            beta_temp: 0.0,
            group_fe_sd: 0.3,
            quarter_fe_sd: 0.1,
            noise_sd: 0.05,
            weight_range: (100.0, 3000.0),
            max_entry_gap: 16,
            seed: 0,
        }
    }
}

impl PanelDgp {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDgp(m.to_string()));
        if self.routes == 0 || self.incumbents == 0 {
            return bad("need at least one route and one incumbent");
        }
        if self.incumbents > CARRIERS.len() {
            return bad("too many incumbents per route");
        }
        if !(self.noise_sd >= 0.0 && self.group_fe_sd >= 0.0 && self.quarter_fe_sd >= 0.0) {
            return bad("standard deviations must be nonnegative");
        }
        let (lo, hi) = self.weight_range;
        if !(lo >= 1.0 && hi >= lo && hi.is_finite()) {
            return bad("weight range must satisfy 1 <= lo <= hi");
        }
        if self.max_entry_gap < 1 {
            return bad("max_entry_gap must be at least 1");
        }
        if (self.quarters as i64) < 25 + self.max_entry_gap {
            return bad("sample too short for a full event window");
        }
        Ok(())
    }
}

/// Everything planted by [`gen_panel`].
#[derive(Debug, Clone, PartialEq)]
pub struct PanelTruth {
    pub gamma: BTreeMap<EventBin, f64>,
    pub interaction: Option<PlantedInteraction>,
    pub beta_temp: f64,
    /// Keyed by cluster id (`carrier:route`).
    pub group_fe: BTreeMap<String, f64>,
    pub quarter_fe: BTreeMap<Quarter, f64>,
    pub noise_sd: f64,
}

impl PanelTruth {
    /// Truth for a regression term name as produced by the design.
    pub fn term(&self, name: &str) -> Option<f64> {
        if let Ok(bin) = name.parse::<EventBin>() {
            return self.gamma.get(&bin).copied();
        }
        let inter = self.interaction.as_ref()?;
        if name == inter.measure.name() {
            return Some(inter.main);
        }
        let (bin, measure) = name.split_once(':')?;
        let bin: EventBin = bin.parse().ok()?;
        if measure != inter.measure.name() {
            return None;
        }
        EventBin::INTERACTED
            .iter()
            .position(|b| *b == bin)
            .map(|i| inter.psi[i])
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub rows: Vec<PanelObservation>,
    pub truth: PanelTruth,
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated standard deviation")
}

/// Generate a planted panel. Fails with the first empty bin's label when
/// the draws leave an indicator without observations.
pub fn gen_panel(dgp: &PanelDgp) -> Result<SyntheticPanel> {
    dgp.validate()?;
    let mut rng = rng(dgp.seed);
    let q0 = dgp.first_quarter;
    let last = q0 + (dgp.quarters as i64 - 1);
    let quarter_fe: BTreeMap<Quarter, f64> = q0
        .range_to(last)
        .map(|q| (q, normal(dgp.quarter_fe_sd).sample(&mut rng)))
        .collect();
    let noise = normal(dgp.noise_sd);
    let gamma: BTreeMap<EventBin, f64> = EventBin::INDICATORS.iter().copied().zip(dgp.gamma).collect();

    let mut rows = Vec::new();
    let mut group_fe = BTreeMap::new();
    for r in 0..dgp.routes {
        let route = Route::new(format!("A{r:02}"), format!("B{r:02}"));
        let gap = rng.random_range(1..=dgp.max_entry_gap);
        let t0 = q0 + rng.random_range(12..=(dgp.quarters as i64 - 13 - gap));
        let te = t0 + gap;
        let distance_hundreds = rng.random_range(2.0..25.0);
        let temps: BTreeMap<i32, f64> = (q0.year()..=last.year())
            .map(|y| (y, rng.random_range(0.0..40.0)))
            .collect();
        let quarters: Vec<Quarter> = (t0 - 12)
            .range_to((te - 1).min(t0 + 12))
            .chain(te.range_to(te + 12))
            .collect();
        for carrier in &CARRIERS[..dgp.incumbents] {
            let cluster_id = format!("{carrier}:{route}");
            let alpha = normal(dgp.group_fe_sd).sample(&mut rng);
            group_fe.insert(cluster_id.clone(), alpha);
            for &quarter in &quarters {
                let bin = event_bin(quarter, t0, te)?;
                let z: [Option<f64>; 12] = std::array::from_fn(|_| Some(rng.random_range(0.0..1.0)));
                let temp = temps[&quarter.year()];
                let mut mean = alpha + quarter_fe[&quarter] + dgp.beta_temp * temp;
                mean += gamma.get(&bin).copied().unwrap_or(0.0);
                if let Some(inter) = &dgp.interaction {
                    let zv = z[inter.measure.position()].expect("drawn above");
                    mean += inter.main * zv;
                    if let Some(i) = EventBin::INTERACTED.iter().position(|b| *b == bin) {
                        mean += inter.psi[i] * zv;
                    }
                }
                let outcomes: [f64; 8] = std::array::from_fn(|_| mean + noise.sample(&mut rng));
                let (lo, hi) = dgp.weight_range;
                let weight = if lo == hi { lo } else { rng.random_range(lo..hi).round() };
                rows.push(PanelObservation {
                    carrier: carrier.to_string(),
                    route: route.clone(),
                    quarter,
                    t0,
                    te,
                    bin,
                    outcomes,
                    distance_hundreds,
                    temp_differential: Some(temp),
                    z,
                    weight,
                    cluster_id: cluster_id.clone(),
                });
            }
        }
    }
    for bin in EventBin::INDICATORS {
        if !rows.iter().any(|o| o.bin == bin) {
            return Err(Error::EmptyBin(bin.label()));
        }
    }
    rows.sort_by(|a, b| (&a.carrier, &a.route, a.quarter).cmp(&(&b.carrier, &b.route, b.quarter)));
    Ok(SyntheticPanel {
        rows,
        truth: PanelTruth {
            gamma,
            interaction: dgp.interaction.clone(),
            beta_temp: dgp.beta_temp,
            group_fe,
            quarter_fe,
            noise_sd: dgp.noise_sd,
        },
    })
}

/// Solve the weighted normal equations `(X'WX) b = X'Wy` by explicit
/// inversion. Intended as an oracle for small instances only.
pub fn brute_force_wls(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() || y.len() != w.len() {
        return Err(Error::Dimension(format!(
            "X is {}x{}, y has {}, w has {}",
            x.nrows(),
            x.ncols(),
            y.len(),
            w.len()
        )));
    }
    let xtw = x.transpose() * DMatrix::from_diagonal(w);
    let gram = &xtw * x;
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if x.ncols() == 0 || !(max > 0.0) || min <= max * 1e-13 {
        return Err(Error::SingularGram);
    }
    let inv = gram.try_inverse().ok_or(Error::SingularGram)?;
    Ok(inv * (xtw * y))
}
