//! `u(t) = f(u(t)) + int_0^t g(s, u(s)) ds` on `C([0, T], R^d)`.
//!
//! Split as `A u(t) = f(0) + int_0^t g(s, u) ds` and `B u(t) = f(u(t)) - f(0)`.
//! Under the growth bound `|g(s, u)| <= alpha(s) phi(|u|)` the tube
//! `|u(t)| <= b(t)`, `b(t) = J^{-1}(int_0^t alpha)`,
//! `J(z) = int_{|f(0)|}^z dx / phi(x)`, is mapped into itself by `A`.

use std::sync::Arc;

use super::quad::adaptive_trapezoid;
use super::{ScalarFn, TimeVecMap, VecMap};
use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::engine::{self, Iterate, Observation, OperatorPair, SolveOptions};
use crate::error::{Error, Result};
use crate::space::{self, vector_norm, Grid, GridFunction, SpaceSpec};

/// Slack used for tube membership and the `|u| <= |A v|` mechanism check.
const TUBE_SLACK: f64 = 1e-8;
/// Upper cap when searching for the Osgood level.
const OSGOOD_CAP: f64 = 1e12;

#[derive(Clone)]
pub struct VolterraProblem {
    pub f: VecMap,
    /// Lipschitz constant of `f`, must be below 1.
    pub f_lip: f64,
    pub g: TimeVecMap,
    pub alpha: ScalarFn,
    /// Positive, nondecreasing.
    pub phi: ScalarFn,
    pub grid: Grid,
    pub dim: usize,
    pub vector_p: f64,
}

impl std::fmt::Debug for VolterraProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolterraProblem")
            .field("f_lip", &self.f_lip)
            .field("grid", &self.grid)
            .field("dim", &self.dim)
            .field("vector_p", &self.vector_p)
            .finish_non_exhaustive()
    }
}

impl VolterraProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new<F, G, Al, Ph>(grid: Grid, dim: usize, f: F, f_lip: f64, g: G, alpha: Al, phi: Ph) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        Al: Fn(f64) -> f64 + Send + Sync + 'static,
        Ph: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(f),
            f_lip,
            g: Arc::new(g),
            alpha: Arc::new(alpha),
            phi: Arc::new(phi),
            grid,
            dim,
            vector_p: 2.0,
        }
    }

    pub fn with_vector_p(mut self, p: f64) -> Self {
        self.vector_p = p;
        self
    }

    /// `f` at the zero vector.
    pub fn f_zero(&self) -> Vec<f64> {
        (self.f)(&vec![0.0; self.dim])
    }

    pub fn space(&self) -> SpaceSpec {
        SpaceSpec::sup(self.vector_p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_lip >= 0.0 && self.f_lip < 1.0) {
            return Err(Error::NotAContraction(self.f_lip));
        }
        if self.dim == 0 {
            return Err(Error::ShapeMismatch("dim must be positive".into()));
        }
        if self.f_zero().len() != self.dim {
            return Err(Error::ShapeMismatch("f must return dim components".into()));
        }
        for (i, t) in self.grid.nodes().enumerate() {
            let a = (self.alpha)(t);
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Range(format!("alpha({t}) = {a} at node {i} must be finite and >= 0")));
            }
        }
        let f0 = vector_norm(&self.f_zero(), self.vector_p);
        // J starts at |f(0)|, so phi only has to be positive from there on.
        for x in [f0, f0 + 1.0, f0 + 10.0, f0 + 1e3] {
            let v = (self.phi)(x);
            if !(v > 0.0) {
                return Err(Error::Range(format!("phi({x}) = {v} must be positive")));
            }
        }
        SpaceSpec::sup(self.vector_p).validate()
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if *u.grid() != self.grid || u.dim() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "function on (n={}, dim={}) does not match problem (n={}, dim={})",
                u.grid().n_steps(),
                u.dim(),
                self.grid.n_steps(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Trapezoid running integral of `alpha` at the nodes.
fn alpha_integral(prob: &VolterraProblem) -> Vec<f64> {
    let a = GridFunction::from_scalar_fn(prob.grid, |t| (prob.alpha)(t)).expect("alpha validated finite");
    space::cumulative_integral(&a).into_values()
}

/// The a-priori tube radius `b(t_i) = J^{-1}(int_0^{t_i} alpha)`.
pub fn bound_b(prob: &VolterraProblem) -> Result<GridFunction> {
    prob.validate()?;
    let f0 = vector_norm(&prob.f_zero(), prob.vector_p);
    let phi = prob.phi.clone();
    let inv_phi = move |x: f64| 1.0 / phi(x);
    let levels = alpha_integral(prob);
    let total = *levels.last().unwrap();

    // Osgood check: find Z with J(Z) > int_0^T alpha by doubling.
    let mut z = f0.max(1.0);
    let mut j = adaptive_trapezoid(&inv_phi, f0, z, 1e-14);
    while j <= total {
        if z >= OSGOOD_CAP {
            let node = levels.iter().position(|&c| c >= j).unwrap_or(levels.len() - 1);
            return Err(Error::BlowupBeforeT { node, t: prob.grid.node(node) });
        }
        let next = (2.0 * z).min(OSGOOD_CAP);
        j += adaptive_trapezoid(&inv_phi, z, next, 1e-14);
        z = next;
    }

    let mut values = Vec::with_capacity(levels.len());
    let (mut z_prev, mut j_prev) = (f0, 0.0_f64);
    for (i, &target) in levels.iter().enumerate() {
        if target <= j_prev {
            values.push(z_prev);
            continue;
        }
        // Bracket: grow the step from a first-order guess dz ~ phi(z) dJ.
        let mut width = (2.0 * (prob.phi)(z_prev) * (target - j_prev)).max(1e-12);
        let mut hi = z_prev + width;
        while j_prev + adaptive_trapezoid(&inv_phi, z_prev, hi, 1e-15) < target {
            if hi >= OSGOOD_CAP {
                return Err(Error::BlowupBeforeT { node: i, t: prob.grid.node(i) });
            }
            width *= 2.0;
            hi = (z_prev + width).min(OSGOOD_CAP);
        }
        // Safeguarded Newton on z -> J(z) - target, using J' = 1/phi.
        let mut lo = z_prev;
        let mut z = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = j_prev + adaptive_trapezoid(&inv_phi, z_prev, z, 1e-15) - target;
            if r.abs() <= 1e-15 * target.max(1.0) {
                break;
            }
            if r < 0.0 {
                lo = z;
            } else {
                hi = z;
            }
            if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                break;
            }
            let newton = z - r * (prob.phi)(z);
            z = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        let z_i = z;
        j_prev += adaptive_trapezoid(&inv_phi, z_prev, z_i, 1e-15);
        z_prev = z_i;
        values.push(z_i);
    }
    GridFunction::new(prob.grid, 1, values)
}

/// `A u(t_i) = f(0) + int_0^{t_i} g(s, u(s)) ds` (trapezoid).
pub fn volterra_a(prob: &VolterraProblem, u: &GridFunction) -> Result<GridFunction> {
    prob.check_grid(u)?;
    let g = prob.g.clone();
    let w = u.map_rows(prob.dim, |t, x| g(t, x))?;
    let integral = space::cumulative_integral(&w);
    let f0 = GridFunction::constant(prob.grid, &prob.f_zero());
    space::add(&integral, &f0)
}

/// `B u(t) = f(u(t)) - f(0)`.
fn volterra_b(prob: &VolterraProblem, u: &GridFunction) -> Result<GridFunction> {
    prob.check_grid(u)?;
    let f = prob.f.clone();
    let f0 = prob.f_zero();
    u.map_rows(prob.dim, |_, x| f(x).iter().zip(&f0).map(|(a, b)| a - b).collect())
}

/// Outcome of [`solve_volterra`].
#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub report: engine::IterationReport,
    pub bound: GridFunction,
    /// `max_i |u(t_i)| / b(t_i)` for the final iterate.
    pub tightness: f64,
    /// Iterates with `|u_{k+1}(t_i)| > |A(u_k)(t_i)|` at some node.
    pub mechanism_violations: usize,
}

/// Solves the Volterra equation with the tube `|u(t)| <= b(t)` as the
/// monitored invariant set.
pub fn solve_volterra(prob: &VolterraProblem, opts: &SolveOptions) -> Result<VolterraSolution> {
    let bound = bound_b(prob)?;
    let pa = prob.clone();
    let pb = prob.clone();
    let pair = OperatorPair::new(
        move |u: &GridFunction| volterra_a(&pa, u),
        move |u: &GridFunction| volterra_b(&pb, u),
        prob.f_lip,
    );
    let s = prob.space();
    let vp = prob.vector_p;
    let b_vals = bound.values().to_vec();
    let mut mechanism_violations = 0;
    let mut monitor = |it: &Iterate<'_>| -> Result<Observation> {
        let norms = it.u.pointwise_norms(vp);
        let inside = norms.iter().zip(&b_vals).all(|(n, b)| *n <= b + TUBE_SLACK);
        let mut warning = None;
        if let Some(w) = it.driver {
            let wn = w.pointwise_norms(vp);
            if norms.iter().zip(&wn).any(|(n, d)| *n > d + TUBE_SLACK) {
                mechanism_violations += 1;
                warning = Some("iterate exceeds |A(previous)| pointwise".to_string());
            }
        }
        Ok(Observation { membership_ok: Some(inside), a5_margin: None, warning })
    };
    let zero = GridFunction::zeros(prob.grid, prob.dim);
    let report = engine::krasnoselskii_monitored(&pair, &zero, &s, opts, &mut monitor)?;
    let tightness = report
        .final_u
        .pointwise_norms(vp)
        .iter()
        .zip(&b_vals)
        .map(|(n, b)| {
            if *b > 0.0 {
                n / b
            } else if *n > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0_f64, f64::max);
    Ok(VolterraSolution { report, bound, tightness, mechanism_violations })
}

/// How far `A u` leaves the tube for a `u` inside it.
///
/// Returns `(chain, spread)`: the largest `|A u(t_i)| - b(t_i)` and the
/// largest `|A u(t_i) - A u(t_j)| - |b(t_i) - b(t_j)|`, over consecutive
/// nodes or, with `all_pairs`, over every pair. Both are `<= 0` when the
/// bound chain holds exactly.
pub fn tube_excess(
    prob: &VolterraProblem,
    bound: &GridFunction,
    u: &GridFunction,
    all_pairs: bool,
) -> Result<(f64, f64)> {
    let au = volterra_a(prob, u)?;
    let b = bound.values();
    let norms = au.pointwise_norms(prob.vector_p);
    let chain = norms.iter().zip(b).map(|(n, b)| n - b).fold(f64::NEG_INFINITY, f64::max);
    let n = b.len();
    let mut spread = f64::NEG_INFINITY;
    let mut diff = vec![0.0; prob.dim];
    for i in 0..n {
        let stop = if all_pairs { n } else { (i + 2).min(n) };
        for j in i + 1..stop {
            for (d, (x, y)) in diff.iter_mut().zip(au.row(j).iter().zip(au.row(i))) {
                *d = x - y;
            }
            let e = vector_norm(&diff, prob.vector_p) - (b[j] - b[i]).abs();
            spread = spread.max(e);
        }
    }
    Ok((chain, spread))
}

/// Compares the discrete `W^{1,inf}` norm of a computed solution with the
/// radius of a passing C6 certificate.
pub fn check_lipschitz_bound(u: &GridFunction, c6: &Certificate, vector_p: f64) -> Result<Certificate> {
    let radius = match (c6.verdict, c6.radius) {
        (Verdict::Pass, Some(r)) => r,
        _ => return Err(Error::CertificateRequired("the Lipschitz check needs a passing C6 radius".into())),
    };
    let n = space::norm(u, &SpaceSpec::w1inf(vector_p))?;
    let margin = radius - n;
    let verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
    Ok(Certificate::new(CertificateKind::C6Radius, verdict, Some(radius), margin).with("w1inf_norm", n))
}
