//! IMEX time integration for `u_t = L u + q + g(u)` on top of the HPS solver.

pub mod problem;
pub mod stepper;
pub mod tableau;

pub use problem::{evaluate_nonlinear, BoundaryData, Fields, NonlinearFn, ParabolicProblem, PointFn};
pub use stepper::{Formulation, SourceWeights, Stepper, StepperState};
pub use tableau::{load_tableau, scalar_stability_function, ButcherPair};
