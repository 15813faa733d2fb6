//! Electrostatically actuated tubular soap film.
//!
//! A film between two rings, surrounded by a grounded outer cylinder, is
//! pulled outward by the field of a voltage applied across the gap. The
//! film's deviation `u(t, z)` from the unit cylinder evolves by a
//! mean-curvature-type parabolic equation forced by the normal derivative
//! of a potential that solves an elliptic problem in the annular region
//! between the film and the cylinder. The elliptic problem is pulled back
//! to a fixed rectangle, discretized with a nine-point stencil and solved
//! at every time step.

pub mod catenoid;
pub mod cli_io;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod force;
pub mod linalg;
pub mod mesh;
pub mod stepper;
pub mod verification;

pub use error::{Error, Result};
