//! Sum-of-operators fixed-point solvers on discretized function spaces.
//!
//! The crate solves `u = A(u) + B(u)` with `B` a contraction by iterating
//! `(I - B)^{-1} o A`, checks the invariant-ball and geometric hypotheses
//! behind such solves as runtime [`certificate::Certificate`]s, and applies
//! the machinery to Volterra and Hammerstein integral equations and to a
//! one-dimensional semilinear elliptic problem.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod config;
pub mod elliptic;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod integral;
pub mod rng;
pub mod run;
pub mod space;

pub use error::{Error, Result};
