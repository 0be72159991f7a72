//! Error types shared by every module of the crate.

use thiserror::Error;

use crate::chart::Side;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} out of range (chart has {naxes} axes)")]
    AxisOutOfRange { axis: usize, naxes: usize },

    #[error("derivative order {0} unsupported (only 1 and 2)")]
    BadDerivativeOrder(usize),

    #[error("point outside chart domain on axis {axis}: {value}")]
    PointOutsideDomain { axis: usize, value: f64 },

    #[error("metric not positive definite at node {node}{}", detail_suffix(.detail))]
    SingularMetric { node: usize, detail: String },

    #[error("degenerate metric at t = {t}: min eigenvalue {min_eig:.3e} at node {node}")]
    DegenerateMetric { node: usize, min_eig: f64, t: f64 },

    #[error("invalid metric at node {node}: g^00 = {g00inv:.3e} <= 0")]
    InvalidNormal { node: usize, g00inv: f64 },

    #[error(
        "boundary solve failed to converge on side {side:?}: residual {residual:.3e} \
         at node {node} after {iters} iterations"
    )]
    NonConvergence {
        side: Side,
        node: usize,
        residual: f64,
        iters: usize,
    },

    #[error("singular Jacobian in boundary solve on side {side:?}")]
    SingularJacobian { side: Side },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("operation not supported on this chart: {0}")]
    ChartUnsupported(String),

    #[error("charts do not match: {0}")]
    ChartMismatch(String),

    #[error("tabulated rule undefined at t = {0}")]
    TabulationOutOfRange(f64),

    #[error("background family must equal the initial metric at t = 0 (max deviation {0:.3e})")]
    BackgroundMismatch(f64),

    #[error("compatibility check failed: {0}")]
    Incompatible(String),

    #[error("diffeomorphism left the chart domain at node {node}, t = {t}")]
    NodeExitedDomain { node: usize, t: f64 },

    #[error("degenerate pullback Jacobian at node {node} (det = {det:.3e})")]
    DegenerateJacobian { node: usize, det: f64 },

    #[error("trajectory does not cover [{0}, {1}]")]
    TrajectoryGap(f64, f64),

    #[error("not enough time samples: need {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn detail_suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(": {detail}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
