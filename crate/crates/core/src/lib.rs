//! Value-function estimation for finite Markov reward processes with
//! linear function approximation.
//!
//! The crate computes the LSTD solution along every route that leads to it
//! (projected fixpoint, instrumental variables, linear dynamical system,
//! expected TD update, quadratic form), Bellman residual minimization,
//! regularized and episodic variants, and a verification suite that checks
//! the identities relating them.

pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod mrp;
pub mod projections;
pub mod regularizers;
pub mod verification;

pub use error::{LstdError, Result};
