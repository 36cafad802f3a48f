use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid length {0}: must be even and at least 8")]
    InvalidGrid(usize),

    #[error("grid mismatch: expected length {expected}, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("zero reference")]
    ZeroReference,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("window not numerically periodizable (tail ratio {0:e})")]
    WindowNotPeriodizable(f64),

    #[error("not a frame (lower bound {lower:e}, upper bound {upper:e})")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("coefficient grid dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("unknown potential '{0}'")]
    UnknownPotential(String),

    #[error("lattice index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stiff or singular: step size underflow at t = {t}")]
    StiffOrSingular { t: f64 },

    #[error("focal point: |M| = {modulus:e} at t = {t}")]
    FocalPoint { t: f64, modulus: f64 },

    #[error("beam (m = {m}, n = {n}) failed: {source}")]
    Beam {
        m: usize,
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("scenario '{name}': {source}")]
    Scenario {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
