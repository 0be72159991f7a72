//! A finite-difference laboratory for geometric evolution of Riemannian
//! metrics on domains with boundary, under prescribed boundary mean curvature
//! and conformal class, with a gauge-fixed parabolic core flow.
//!
//! The crate is organized around the pipeline:
//! grid geometry -> curvature operators -> boundary system -> time stepping
//! -> gauge transport back to the unmodified flow, with a well-posedness
//! toolbox (boundary symbol checker, compatibility ladder, corner probe,
//! extension monitor) and a CLI/convergence harness on top.

pub mod catalog;
pub mod chart;
pub mod curvature;
pub mod error;
pub mod field;
pub mod smallmat;
pub mod stencil;
pub mod warped;

pub use chart::{Chart, ChartKind, Side};
pub use error::{Error, Result};
pub use field::{MetricField, Rank, SymTensorField};
