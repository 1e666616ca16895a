use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice side must be at least 2, got {m}")]
    InvalidGrid { m: usize },

    #[error("location {row} has no neighbours; cannot row-standardize")]
    IsolatedLocation { row: usize },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionError {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("weight matrix diagonal entry ({index},{index}) is {value}, must be zero")]
    DiagonalNotZero { index: usize, value: f64 },

    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("time grid with {t_len} periods is too short for a bandwidth (need at least 2)")]
    DegenerateGrid { t_len: usize },

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("kernel weights sum to zero at tau0 = {tau0}")]
    SingularWeights { tau0: f64 },

    #[error("{stage}: local system at tau0 = {tau0} is singular (reciprocal condition {rcond:.3e})")]
    SingularLocalSystem {
        stage: &'static str,
        tau0: f64,
        rcond: f64,
    },

    #[error("instrument construction needs at least 2 regressors (intercept plus one), got {p}")]
    InsufficientRegressors { p: usize },

    #[error("column {col} of the design matrix must be the all-ones intercept")]
    MissingIntercept { col: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("constant-coefficient block is collinear after profiling (reciprocal condition {rcond:.3e})")]
    CollinearConstantBlock { rcond: f64 },

    #[error("residual sum of squares must be positive, got {rss}")]
    InvalidRss { rss: f64 },

    #[error("bootstrap data-generating operator I - rho W is singular (max |rho| = {max_abs_rho})")]
    ExplosiveBootstrapDgp { max_abs_rho: f64 },

    #[error("simulation operator I - rho W is singular at period {period}")]
    DgpSingular { period: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("replicate {index} failed: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

impl Error {
    /// Tags a local-system failure with the estimation stage it came from.
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::SingularLocalSystem { tau0, rcond, .. } => Error::SingularLocalSystem {
                stage,
                tau0,
                rcond,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
