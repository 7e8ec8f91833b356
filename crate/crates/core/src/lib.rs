//! Numerical laboratory for two-dimensional Ricci flow in conformal-factor
//! form, du/dt = e^{-2u} \Delta u = -K[u]: discrete geometry, exact model
//! flows, time integration with barrier boundary policies, and quantitative
//! verification of the flow's structural estimates.

// guards of the form `!(x > 0.0)` are deliberate: they reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod geometry;
pub mod runner;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use error::{Result, RicciError};
pub use exact::{maximal_time, pde_residual, ExactFlow, TopologyTag};
pub use geometry::{
    deviation_field, deviation_norm, gauss_curvature, laplacian, metric_order, volume, Chart,
    ConformalField, HyperbolicModel, MetricOrder, NodeStatus,
};
pub use solver::{
    evolve, evolve_normalized, evolve_normalized_with_reference, evolve_with_reference,
    exhaustion_solve, normalized_to_physical, plane_solve, step, BoundaryPolicy, ExhaustionResult,
    FlowState, PlaneResult, Scheme, Snapshot, StepControl, StepRecord, Trajectory,
};
pub use verify::{CheckVerdict, DiagnosticsReport};
