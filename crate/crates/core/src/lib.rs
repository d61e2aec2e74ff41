//! Fully discrete Galerkin method for Abel-type integral equations
//!
//! ```text
//! (1/Γ(α)) ∫₀ˣ (x − y)^(α−1) K(x, y) f(y) dy = g(x),   x ∈ (0, 1)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: partitions of `(0,1)` and the piecewise polynomial spaces `S^m`.
//! * [`quadrature`]: Gauss-Legendre / Gauss-Jacobi rules and the order policy.
//! * [`operator`]: kernels, problem definitions and a forward-operator oracle.
//! * [`assembly`]: the Galerkin matrix and load vector.
//! * [`solve`]: direct solution of the linear system.
//! * [`norms`]: fractional norms through the cosine Hilbert scale.
//! * [`admissibility`]: coercivity constants for separable kernels.
//! * [`harness`]: convergence studies, configuration, CSV and SVG output.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod assembly;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod solve;

pub use error::{Error, Result};
