#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod background;
pub mod chart;
pub mod constants;
pub mod convergence;
pub mod curve;
pub mod flow;
pub mod linalg;
pub mod metric;
pub mod monitor;
pub mod residual;
pub mod scenario;
pub mod stencil;

pub(crate) mod fx;

pub use background::{Background, BackgroundKind, BackgroundSpec, ExactData};
pub use chart::ChartDomain;
pub use constants::ConstantsEstimate;
pub use curve::{CurveGeometry, CurveSeed, DiscreteCurve};
pub use flow::{FlowParams, FlowState, Trajectory};
pub use linalg::{Matrix, Tensor3, Vector};
pub use metric::{ChristoffelTable, GeomError, Geometry, MetricFamily, SpacetimeVector};
pub use monitor::MonitorSeries;
pub use residual::{K2Variant, ResidualReport};
pub use scenario::Scenario;
