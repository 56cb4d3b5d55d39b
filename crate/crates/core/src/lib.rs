//! Map-aided dead reckoning from vehicle speed alone.
//!
//! The crate is `no_std` with `alloc`. File formats, the command line and
//! parallel evaluation live in the companion `mapdr` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod eval;
pub mod filter;
pub mod geo;
pub mod graph;
pub mod kf;
pub mod likelihood;
pub mod maps;
pub mod motion;
pub mod sim;

pub use error::{EvalError, FilterError, GeoError, GraphError, SimError};
pub use filter::{EstimatorKind, FilterParams, FilterRun, Particle, StepDiagnostics};
pub use geo::{geodesic_distance, GeoPoint, LocalProjection, PlanarPoint};
pub use graph::{LinkId, RoadFilter, RoadGraph};
pub use motion::PathState;
