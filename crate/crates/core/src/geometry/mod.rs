//! Discrete charts, differential operators, model hyperbolic metrics,
//! volumes and norms for conformal metrics on planar domains.

pub mod chart;
pub mod field;
pub mod hyperbolic;
pub mod ops;

pub use chart::{Chart, NodeStatus};
pub use field::{metric_order, ConformalField, MetricOrder};
pub use hyperbolic::HyperbolicModel;
pub use ops::{deviation_field, deviation_norm, gauss_curvature, laplacian, volume};
