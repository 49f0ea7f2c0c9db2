//! Spectral Galerkin solver for the Landau-Lifshitz-Bloch equation above the
//! Curie temperature, together with an audit harness that numerically checks
//! the energy estimates, projection bounds, weak-form identities and
//! regularity properties of the approximation.
//!
//! The trial space is the span of the leading Laplacian eigenmodes on an
//! axis-aligned box (Neumann by default, Dirichlet supported).  The evolution
//!
//! ```text
//! du/dt = kappa1 Lap(u) + gamma P(u x Lap u) - kappa2 P((1 + mu|u|^2) u)
//! ```
//!
//! is advanced either by an IMEX Euler step (diagonal implicit linear part)
//! or classical RK4, while an energy ledger records every norm the estimates
//! involve.  The `oracle` module carries independent references (closed-form
//! solutions, dense quadrature projection, a finite-difference cross-solver)
//! and `verify` bundles the whole battery behind one call.

// Validation comparisons are written as negations (`!(x > 0.0)`) so NaN
// fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod error;
pub mod field;
pub mod integrator;
pub mod operators;
pub mod oracle;
pub mod vec3;
pub mod verify;

pub use error::{Error, Result};
