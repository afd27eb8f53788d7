//! Volterra and Hammerstein integral equations built on the fixed-point
//! engine.

mod hammerstein;
pub mod quad;
mod volterra;

use std::sync::Arc;

pub use hammerstein::{
    ball_certificate_a3, kernel_apply, kernel_constant, solve_hammerstein, HammersteinProblem,
    HammersteinSolution, KernelMatrix,
};
pub use volterra::{
    bound_b, check_lipschitz_bound, solve_volterra, tube_excess, volterra_a, VolterraProblem,
    VolterraSolution,
};

/// `R^d -> R^d`.
pub type VecMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// `(t, x) -> R^d`.
pub type TimeVecMap = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// `R -> R`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `(t, s) -> R`.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
