//! Finite-volume solver for the parabolic-parabolic Keller-Segel system with
//! singular sensitivity and logistic source,
//!
//! ```text
//! u_t = Δu - χ ∇·(u/v ∇v) + a u - μ u²,   v_t = Δv - v + u,
//! ```
//!
//! on boxes in one or two dimensions with homogeneous Neumann boundaries,
//! together with the algebra of its boundedness and stabilisation
//! conditions, trajectory diagnostics and an acceptance suite.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};
