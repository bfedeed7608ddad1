//! Two-way fixed-effects event-study regressions.
//!
//! The model regresses a logged outcome on the fifteen event-time
//! indicators (the baseline bin is omitted), optional network-measure
//! interactions and controls, with carrier-route and quarter fixed effects,
//! by passenger-weighted least squares. Standard errors are heteroskedasticity
//! robust (HC1) or clustered by carrier-route (CR1).
//!
//! Two numerically equivalent solvers exist: a dense QR on the full dummy
//! expansion and a within solver that absorbs both fixed-effect families
//! exactly before a QR on the remaining regressors.

mod covariance;
mod design;
mod qr;
mod result;
mod within;

pub use covariance::{covariance_cluster, covariance_robust};
pub use design::{design_matrix, Design};
pub use qr::{fit_wls, WlsFit};
pub use result::{
    effect_at, effect_percent, r_squared, read_fit_csv, stars, write_fit_csv, CoefRow, FitResult,
    FitSummary,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netgraph::NetworkMeasure;
use crate::threatscan::{Outcome, PanelObservation};

/// Columns whose residual norm falls below this fraction of their own
/// weighted norm, after projecting out the columns before them, are dropped
/// as collinear.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Control {
    Distance,
    DistanceSq,
    TempDifferential,
}

impl Control {
    pub const ALL: [Control; 3] = [Control::Distance, Control::DistanceSq, Control::TempDifferential];

    pub fn name(self) -> &'static str {
        match self {
            Control::Distance => "distance_hundreds",
            Control::DistanceSq => "distance_hundreds_sq",
            Control::TempDifferential => "temp_differential",
        }
    }

    pub fn caption(self) -> &'static str {
        match self {
            Control::Distance => "Distance (100 miles)",
            Control::DistanceSq => "Distance-squared",
            Control::TempDifferential => "Temp. differential (F)",
        }
    }

    pub fn value(self, o: &PanelObservation) -> Option<f64> {
        match self {
            Control::Distance => Some(o.distance_hundreds),
            Control::DistanceSq => Some(o.distance_hundreds_sq()),
            Control::TempDifferential => o.temp_differential,
        }
    }
}

impl FromStr for Control {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" | "distance_hundreds" => Ok(Control::Distance),
            "distance_sq" | "distance2" | "distance_hundreds_sq" => Ok(Control::DistanceSq),
            "temp" | "temperature" | "temp_differential" => Ok(Control::TempDifferential),
            _ => Err(Error::UnknownControl(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceKind {
    Robust,
    #[default]
    Cluster,
}

impl CovarianceKind {
    pub fn name(self) -> &'static str {
        match self {
            CovarianceKind::Robust => "robust",
            CovarianceKind::Cluster => "cluster",
        }
    }
}

impl FromStr for CovarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" | "hc1" => Ok(CovarianceKind::Robust),
            "cluster" | "cr1" => Ok(CovarianceKind::Cluster),
            _ => Err(Error::Parse(format!("unknown covariance kind {s:?}"))),
        }
    }
}

/// How fixed effects enter the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    /// Dense when the expanded design is small, within otherwise.
    #[default]
    Auto,
    Dense,
    Within,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            SolverChoice::Auto => "auto",
            SolverChoice::Dense => "dense",
            SolverChoice::Within => "within",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SolverChoice::Auto),
            "dense" => Ok(SolverChoice::Dense),
            "within" => Ok(SolverChoice::Within),
            _ => Err(Error::Parse(format!("unknown solver {s:?}"))),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    pub outcome: Outcome,
    /// Network measure interacted with the post-threat and entry bins.
    pub interaction: Option<NetworkMeasure>,
    pub controls: Vec<Control>,
    pub covariance: CovarianceKind,
    pub solver: SolverChoice,
}

impl RegressionSpec {
    pub fn new(outcome: Outcome) -> Self {
        RegressionSpec {
            outcome,
            interaction: None,
            controls: Vec::new(),
            covariance: CovarianceKind::Cluster,
            solver: SolverChoice::Auto,
        }
    }

    pub fn with_interaction(mut self, m: NetworkMeasure) -> Self {
        self.interaction = Some(m);
        self
    }

    pub fn with_controls(mut self, controls: &[Control]) -> Self {
        self.controls = controls.to_vec();
        self
    }

    pub fn with_covariance(mut self, kind: CovarianceKind) -> Self {
        self.covariance = kind;
        self
    }

    pub fn with_solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }

    /// Short text form stored in fit metadata.
    pub fn describe(&self) -> String {
        let controls: Vec<&str> = self.controls.iter().map(|c| c.name()).collect();
        format!(
            "outcome={} interaction={} controls={}",
            self.outcome,
            self.interaction.map(|m| m.name()).unwrap_or("none"),
            if controls.is_empty() { "none".to_string() } else { controls.join("+") }
        )
    }
}

/// Estimate `spec` on `panel`.
pub fn fit(panel: &[PanelObservation], spec: &RegressionSpec) -> Result<FitResult> {
    let design = design_matrix(panel, spec)?;
    let solver = match spec.solver {
        SolverChoice::Auto => design.preferred_solver(),
        s => s,
    };
    let est = match solver {
        SolverChoice::Within => within::solve(&design)?,
        _ => qr::solve_dense(&design)?,
    };
    result::assemble(spec, solver, &design, est)
}
