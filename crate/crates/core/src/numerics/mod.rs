//! Dense complex linear algebra and time propagation.

pub mod eigen;
pub mod expm;
pub mod linsolve;
pub mod matrix;
pub mod ode;
pub mod propagator;

pub use eigen::{hermitian_eigen, EigenDecomposition};
pub use expm::matrix_exponential;
pub use linsolve::{condition_estimate, solve_linear};
pub use matrix::ComplexMatrix;
pub use ode::{propagate_ode, OdeOptions};
pub use propagator::{ExpmPropagator, Propagator, PropagatorRegistry, Rk4Propagator, DEFAULT_PROPAGATOR};
