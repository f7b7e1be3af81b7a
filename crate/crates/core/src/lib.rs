//! Numerical laboratory for the curve shortening flow of closed embedded
//! plane curves.
//!
//! * [`geometry`]: polygons, discrete curvature, embeddedness, resampling.
//! * [`exact`]: closed-form solutions used as oracles.
//! * [`flow`]: Lagrangian evolution by the curvature vector.
//! * [`graph_flow`]: the flow as a quasilinear PDE for a normal graph over a
//!   fixed base curve; an independent second engine.
//! * [`diagnostics`]: monotone and conserved quantities along a run.
//! * [`singularity`]: blowup rates, parabolic rescaling and roundness.
//! * [`io`]: CSV curve files and the trajectory directory layout.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod flow;
pub mod geometry;
pub mod graph_flow;
pub mod io;
pub mod shapes;
pub mod singularity;
mod spline;

pub use error::{Error, Result};
pub use geometry::{DiscreteCurve, GeometryFields, PlanePoint, Polyline};
