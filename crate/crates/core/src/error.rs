use std::path::PathBuf;

use crate::quarter::Quarter;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {column:?} in {file} header")]
    MissingColumn { file: String, column: String },
    #[error("invalid quarter {0:?}, expected the form 2006Q1")]
    InvalidQuarter(String),
    #[error("CPI index missing for {year}-{month:02}")]
    MissingCpi { year: i32, month: u32 },
    #[error("invalid CPI index {value} for {year}-{month:02}, must be positive")]
    InvalidCpi { year: i32, month: u32, value: f64 },
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("graph needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("quarter {t} is outside the event window of t0={t0}, te={te}")]
    OutsideEventWindow { t: Quarter, t0: Quarter, te: Quarter },
    #[error("panel has no rows")]
    EmptyPanel,
    #[error("panel has no baseline rows; the event indicators are not identified")]
    NoBaseline,
    #[error("panel has only baseline rows; nothing to identify")]
    AllBaseline,
    #[error("unknown outcome {0:?}")]
    UnknownOutcome(String),
    #[error("unknown network measure {0:?}")]
    UnknownMeasure(String),
    #[error("unknown control {0:?}")]
    UnknownControl(String),
    #[error("design is rank deficient in columns {0:?}")]
    RankDeficient(Vec<String>),
    #[error("weights must be positive and finite (row {row}: {weight})")]
    InvalidWeight { row: usize, weight: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cluster covariance needs at least two clusters, got {0}")]
    SingleCluster(usize),
    #[error("not enough observations: N={n}, K={k}")]
    TooFewObservations { n: usize, k: usize },
    #[error("R-squared undefined: outcome has zero weighted variation")]
    ZeroVariation,
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("synthetic panel leaves bin {0} empty; lengthen the sample window")]
    EmptyBin(String),
    #[error("invalid generator parameters: {0}")]
    InvalidDgp(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
