use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("amplitude field has nonzero boundary value {value:e} at node ({i}, {j})")]
    NonzeroBoundary { i: usize, j: usize, value: f64 },

    #[error("field is not normalized: h²·Σ|f|² = {norm}")]
    NotNormalized { norm: f64 },

    #[error("eigensolver did not converge after {iterations} iterations; relative residuals {residuals:?}")]
    NotConverged { iterations: usize, residuals: Vec<f64> },

    #[error("grid too large for dense diagonalization: {interior} interior nodes (limit {limit})")]
    GridTooLarge { interior: usize, limit: usize },

    #[error("requested {requested} states but only {available} are available")]
    TooManyStates { requested: usize, available: usize },

    #[error("parity check failed: {0}")]
    Parity(String),

    #[error("logical states are not localized in opposite wells: {0}")]
    NotLocalized(String),

    #[error("non-positive distance {distance_nm} nm in Coulomb estimate")]
    NonPositiveDistance { distance_nm: f64 },

    #[error("control and target dots overlap: {weight:e} of the control charge coincides with target node ({i}, {j})")]
    DotOverlap { i: usize, j: usize, weight: f64 },

    #[error("conditional NOT durations are equal ({0:e} s); no conditional contrast")]
    NoContrast(f64),

    #[error("tunnel doublet unresolved: eps10 = {0:e} J")]
    DoubletUnresolved(f64),

    #[error("no integer crossing in barrier interval: n_real = {n_lo} at {vb_lo:e} J, {n_hi} at {vb_hi:e} J")]
    NoSignChange { vb_lo: f64, vb_hi: f64, n_lo: f64, n_hi: f64 },

    #[error("amplitude tuning stalled at |n_real - n| = {residual:e} after {evaluations} evaluations")]
    TuningStalled { residual: f64, evaluations: usize },

    #[error("quadrature not converged for {channel}: {coarse:e} vs {fine:e} (relative change {change:e})")]
    Quadrature { channel: &'static str, coarse: f64, fine: f64, change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
