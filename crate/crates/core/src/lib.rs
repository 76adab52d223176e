//! HPS fast direct solver for variable-coefficient elliptic operators on
//! rectangles, combined with IMEX additive Runge-Kutta time stepping for
//! parabolic problems.

pub mod bench;
pub mod chebyshev;
pub mod dense;
pub mod discretization;
pub mod error;
pub mod hps;
pub mod stability;
pub mod time;
pub mod tree;

pub use error::{HpsError, Result};
