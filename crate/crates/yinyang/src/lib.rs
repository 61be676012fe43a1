// Field and function names follow the paper-style notation (R, F, G_p, ...).
#![allow(non_snake_case)]

//! Numerical laboratory for a compact ancient solution of plane curve
//! shortening flow, built from two rotating soliton arms capped off by a
//! bent Grim Reaper.

pub mod assembly;
pub mod cap;
pub mod deficit;
pub mod fit;
pub mod flow;
pub mod geom;
pub mod homotopy;
pub mod series;
pub mod soliton;

/// Concrete scalar used by the numerical modules.
pub type Scalar = f64;
/// Planar point / vector at working precision.
pub type Point = geom::Vec2<f64>;
/// Sampled curve at working precision.
pub type Curve = geom::SampledCurve<f64>;
