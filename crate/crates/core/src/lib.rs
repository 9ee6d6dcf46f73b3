//! Adaptive P1 finite elements for time-harmonic acoustic-elastic interaction
//! in three dimensions.
//!
//! A solid obstacle (Navier equation) sits inside a fluid (Helmholtz equation);
//! the two are coupled through kinematic and traction conditions on the solid
//! surface. The unbounded fluid is truncated by a perfectly matched layer
//! built from complex coordinate stretching, and a residual-type a posteriori
//! estimator drives bulk-marked newest-vertex bisection.
//!
//! The pipeline is: [`mesh`] → [`assembly`] → [`solver`] → [`estimator`] →
//! [`adaptive`], with [`scenarios`] providing the model problems and [`io`]
//! the run configuration and output formats.

pub mod adaptive;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod io;
pub mod materials;
pub mod mesh;
pub mod quadrature;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;
