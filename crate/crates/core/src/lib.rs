//! Exact solution of the W-constraints for r-spin intersection numbers.

pub mod cache;
pub mod correlator;
pub mod exec;
pub mod generators;
pub mod io;
pub mod scalar;
pub mod solver;
pub mod tpoly;
pub mod verify;
pub mod walgebra;

pub use cache::{CacheError, TauCache};
pub use scalar::{QScalar, Rational, ScalarError};
pub use solver::{compute_tau, compute_tau_exponential, SolverError, TauExpansion};
pub use tpoly::{PolyError, TMonomial, TPolynomial};
