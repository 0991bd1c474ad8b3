//! Monte Carlo simulation of Lambertian light reflections in a
//! `d`-dimensional semi-infinite tube of unit radius, with evaluators for the
//! limit laws the simulation is checked against.
//!
//! The wall is `{(x1, y) : x1 <= s, |y| = 1}` in `R × R^{d-1}`. Light starts
//! on the wall at axial position 0 and travels by successive Lambertian
//! reflections; it leaves through the opening at level `s`.

pub mod analytic;
pub mod chain;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod runner;
pub mod sampling;
pub mod streams;

pub use error::{Error, Result};
pub use geometry::Dimension;
