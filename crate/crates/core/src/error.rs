use thiserror::Error;

/// Errors produced by geometry, exact-flow and solver operations.
#[derive(Debug, Error)]
pub enum RicciError {
    #[error("chart mismatch: operations require fields sharing one chart")]
    ChartMismatch,

    #[error("chart too small: need at least {min} nodes per axis, got {got}")]
    ChartTooSmall { min: usize, got: usize },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("field contains non-finite value at node {node}")]
    NonFiniteField { node: usize },

    #[error("point (|z| = {radius}) outside domain of hyperbolic model {model}")]
    OutsideModelDomain { model: String, radius: f64 },

    #[error("time t = {t} outside domain of exact flow {flow}")]
    TimeOutOfDomain { flow: String, t: f64 },

    #[error("CFL bound {bound:e} below dt_min {dt_min:e}; step refused (try ImplicitEuler)")]
    CflCollapse { bound: f64, dt_min: f64 },

    #[error("Newton iteration failed to converge after {iters} iterations (residual {residual:e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("invalid step control: {0}")]
    InvalidStepControl(String),

    #[error("invalid time range: t0 = {t0} must be below t_end = {t_end}")]
    InvalidTimeRange { t0: f64, t_end: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scenario config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RicciError>;
