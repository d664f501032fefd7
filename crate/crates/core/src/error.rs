use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular time t = {t}: |sin t| below {threshold:e}")]
    SingularTime { t: f64, threshold: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no real stationary point: |z - z'| = {r} exceeds 2")]
    NoStationaryPoint { r: f64 },

    #[error("degenerate amplitude at |z - z'| = {r}: cos S_c vanishes")]
    DegenerateAmplitude { r: f64 },

    #[error("point lies outside the scaling box U")]
    OutsideBox,

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("extrapolation did not converge: residual {residual:e} exceeds {tolerance:e}")]
    NonConvergence { residual: f64, tolerance: f64 },

    #[error("quadrature panel budget exceeded: {panels} panels > cap {cap}")]
    BudgetExceeded { panels: usize, cap: usize },

    #[error("spectral cap exceeded: lambda = {lambda} > mu_max = {cap}")]
    CapExceeded { lambda: f64, cap: u32 },

    #[error("memory cap exceeded: {needed} bytes requested, cap {cap}")]
    MemoryCap { needed: usize, cap: usize },

    #[error("norm ascent stalled; best lower bound {best}")]
    AscentStall { best: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
