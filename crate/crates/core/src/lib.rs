//! Poisson Voronoi percolation on the unit square.
//!
//! The crate samples colored Poisson configurations, decides rectangle
//! crossings exactly on clipped Voronoi tessellations, implements the
//! perturbations and couplings used to study noise sensitivity, runs the
//! mesoscopic exploration algorithm with full query tracing, and provides
//! Monte Carlo and exact-enumeration estimators built on top of them.

pub mod error;
pub mod estimators;
pub mod explorer;
pub mod geometry;
pub mod io;
pub mod perturb;
pub mod seeding;

pub use error::{Error, Result};
