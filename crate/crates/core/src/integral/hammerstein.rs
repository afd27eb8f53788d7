//! `u(t) = f(t, u(t)) + Phi(t, int_0^t k(t, s) u(s) ds)` in `L^p(0, T; R^d)`.
//!
//! `A u(t) = f(t, 0) + Phi(t, K u(t))`, `B u(t) = f(t, u(t)) - f(t, 0)`.
//! The ball of radius `R` in `L^p` is mapped into itself by `A` once
//! `|f(., 0)|_p + |G|_p psi(C R) <= R`, with `C = sup_t |k(t, .)|_q`.

use std::sync::Arc;

use super::{KernelFn, ScalarFn, TimeVecMap};
use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::engine::{self, Iterate, Observation, OperatorPair, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{self, ConvexityProfile};
use crate::space::{self, Grid, GridFunction, SpaceSpec};

const BALL_SLACK: f64 = 1e-8;
const SCAN_POINTS: usize = 4000;
const SCAN_TOP: f64 = 1e6;

#[derive(Clone)]
pub struct HammersteinProblem {
    pub f: TimeVecMap,
    /// Lipschitz constant of `x -> f(t, x)`, uniform in `t`; must be below 1.
    pub f_lip: f64,
    pub k: KernelFn,
    pub phi: TimeVecMap,
    /// `G` in `|Phi(t, v)| <= G(t) psi(|v|)`.
    pub g_bound: ScalarFn,
    /// Nondecreasing.
    pub psi: ScalarFn,
    pub p: f64,
    pub grid: Grid,
    pub dim: usize,
    pub vector_p: f64,
}

impl std::fmt::Debug for HammersteinProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HammersteinProblem")
            .field("f_lip", &self.f_lip)
            .field("p", &self.p)
            .field("grid", &self.grid)
            .field("dim", &self.dim)
            .field("vector_p", &self.vector_p)
            .finish_non_exhaustive()
    }
}

impl HammersteinProblem {
    /// Problem with `f = 0`, identity `Phi`, `G = 1`, `psi(x) = x` and the
    /// kernel `k`; adjust the public fields from there.
    pub fn with_kernel<K>(grid: Grid, dim: usize, p: f64, k: K) -> Self
    where
        K: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            f: Arc::new(move |_, _| vec![0.0; dim]),
            f_lip: 0.0,
            k: Arc::new(k),
            phi: Arc::new(|_, v| v.to_vec()),
            g_bound: Arc::new(|_| 1.0),
            psi: Arc::new(|x| x),
            p,
            grid,
            dim,
            vector_p: 2.0,
        }
    }

    pub fn f<F>(mut self, f: F, f_lip: f64) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.f = Arc::new(f);
        self.f_lip = f_lip;
        self
    }

    /// Sets `Phi` together with its growth bound `G(t) psi(|v|)`.
    pub fn phi<P, G, S>(mut self, phi: P, g_bound: G, psi: S) -> Self
    where
        P: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.phi = Arc::new(phi);
        self.g_bound = Arc::new(g_bound);
        self.psi = Arc::new(psi);
        self
    }

    pub fn space(&self) -> SpaceSpec {
        SpaceSpec::lp(self.p, self.vector_p)
    }

    /// Conjugate exponent `p / (p - 1)`.
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.space().validate()?;
        if !(self.f_lip >= 0.0 && self.f_lip < 1.0) {
            return Err(Error::NotAContraction(self.f_lip));
        }
        if self.dim == 0 {
            return Err(Error::ShapeMismatch("dim must be positive".into()));
        }
        Ok(())
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

    /// `t -> f(t, 0)` on the grid.
    pub fn f_zero(&self) -> Result<GridFunction> {
        let zero = vec![0.0; self.dim];
        let f = self.f.clone();
        GridFunction::from_fn(self.grid, self.dim, |t| f(t, &zero))
    }
}

/// Trapezoid weights of `int_0^{t_i} k(t_i, s) ds`, one row per output node.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: Vec<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(grid: &Grid, k: &dyn Fn(f64, f64) -> f64) -> Result<Self> {
        let h = grid.h();
        let mut rows = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let t = grid.node(i);
            let mut row = Vec::with_capacity(i + 1);
            for j in 0..=i {
                let v = k(t, grid.node(j));
                if !v.is_finite() {
                    return Err(Error::NonFinite { node: i, component: j });
                }
                let w = if i == 0 {
                    0.0
                } else if j == 0 || j == i {
                    0.5 * h
                } else {
                    h
                };
                row.push(w * v);
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.grid().len() != self.rows.len() {
            return Err(Error::ShapeMismatch(format!(
                "kernel built for {} nodes, function has {}",
                self.rows.len(),
                u.grid().len()
            )));
        }
        let d = u.dim();
        let mut out = vec![0.0; u.values().len()];
        for (i, row) in self.rows.iter().enumerate() {
            let acc = &mut out[i * d..(i + 1) * d];
            for (j, w) in row.iter().enumerate() {
                for (a, x) in acc.iter_mut().zip(u.row(j)) {
                    *a += w * x;
                }
            }
        }
        GridFunction::new(*u.grid(), d, out)
    }
}

/// `K u(t_i)` by the trapezoid rule.
pub fn kernel_apply(prob: &HammersteinProblem, u: &GridFunction) -> Result<GridFunction> {
    prob.check_grid(u)?;
    KernelMatrix::new(&prob.grid, &*prob.k)?.apply(u)
}

/// `C = max_i (int_0^{t_i} |k(t_i, s)|^q ds)^{1/q}`.
pub fn kernel_constant(prob: &HammersteinProblem) -> f64 {
    let q = prob.q();
    let g = prob.grid;
    (1..g.len())
        .map(|i| {
            let t = g.node(i);
            let samples: Vec<f64> = (0..=i).map(|j| (prob.k)(t, g.node(j)).abs().powf(q)).collect();
            let h = g.h();
            let sum: f64 = samples.iter().sum::<f64>() - 0.5 * (samples[0] + samples[i]);
            (h * sum).powf(1.0 / q)
        })
        .fold(0.0, f64::max)
}

/// Smallest `R` on a log scan (refined by bisection) with
/// `|G|_p psi(C R) / (R - |f(., 0)|_p) <= 1`.
///
/// PASS carries `1 - ratio(R)`; FAIL carries the smallest ratio seen.
pub fn ball_certificate_a3(prob: &HammersteinProblem) -> Result<Certificate> {
    prob.validate()?;
    let s = prob.space();
    let f0p = space::norm(&prob.f_zero()?, &s)?;
    let gfun = GridFunction::from_scalar_fn(prob.grid, |t| (prob.g_bound)(t).abs())?;
    let gp = space::norm(&gfun, &s)?;
    let c = kernel_constant(prob);
    let ratio = |r: f64| gp * (prob.psi)(c * r) / (r - f0p);
    let lo = if f0p > 0.0 { f0p * (1.0 + 1e-6) } else { 1e-6 };
    let cert = |verdict, radius: Option<f64>, margin| {
        Certificate::new(CertificateKind::BallA3, verdict, radius, margin)
            .with("kernel_c", c)
            .with("f0_p", f0p)
            .with("g_p", gp)
    };
    if lo >= SCAN_TOP {
        return Ok(cert(Verdict::Fail, None, f64::INFINITY));
    }
    let step = (SCAN_TOP / lo).ln() / (SCAN_POINTS - 1) as f64;
    let mut best = f64::INFINITY;
    let mut prev = lo;
    for i in 0..SCAN_POINTS {
        let r = lo * (step * i as f64).exp();
        let v = ratio(r);
        if v.is_nan() {
            continue;
        }
        best = best.min(v);
        if v <= 1.0 {
            if i == 0 {
                return Ok(cert(Verdict::Pass, Some(r), 1.0 - v).with("ratio", v));
            }
            let (mut a, mut b) = (prev, r);
            for _ in 0..200 {
                if b - a <= 1e-15 * b {
                    break;
                }
                let m = 0.5 * (a + b);
                if ratio(m) <= 1.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let v = ratio(b);
            return Ok(cert(Verdict::Pass, Some(b), 1.0 - v).with("ratio", v));
        }
        prev = r;
    }
    Ok(cert(Verdict::Fail, None, best))
}

/// Outcome of [`solve_hammerstein`].
#[derive(Debug, Clone)]
pub struct HammersteinSolution {
    pub report: engine::IterationReport,
    pub certificate: Certificate,
    pub epsilon0: f64,
    pub a5_pass: usize,
    pub a5_fail: usize,
    pub a5_vacuous: usize,
    /// Iterates where the strengthened triangle inequality did not hold
    /// although the monotonicity condition passed.
    pub lemma_violations: usize,
    /// `|A u + B u|_p` of the final iterate.
    pub final_image_norm: f64,
}

/// Solves the Hammerstein equation inside the certified `L^p` ball.
///
/// Without a passing ball certificate the solve is refused unless
/// `allow_uncertified` is set; then no ball is monitored.
pub fn solve_hammerstein(
    prob: &HammersteinProblem,
    profile: &ConvexityProfile,
    opts: &SolveOptions,
    allow_uncertified: bool,
) -> Result<HammersteinSolution> {
    let certificate = ball_certificate_a3(prob)?;
    let radius = match (certificate.verdict, certificate.radius) {
        (Verdict::Pass, Some(r)) => Some(r),
        _ if allow_uncertified => None,
        _ => {
            return Err(Error::CertificateRequired(format!(
                "ball certificate failed with ratio {:.6e}",
                certificate.margin
            )))
        }
    };
    let eps0 = geometry::epsilon0(profile)?;
    let km = Arc::new(KernelMatrix::new(&prob.grid, &*prob.k)?);
    let f0 = prob.f_zero()?;
    let a = {
        let (km, f0, phi, p) = (km.clone(), f0.clone(), prob.phi.clone(), prob.clone());
        move |u: &GridFunction| {
            p.check_grid(u)?;
            let ku = km.apply(u)?;
            let out = ku.map_rows(p.dim, |t, v| phi(t, v))?;
            space::add(&out, &f0)
        }
    };
    let b = {
        let (f, p, f0) = (prob.f.clone(), prob.clone(), f0.clone());
        move |u: &GridFunction| {
            p.check_grid(u)?;
            let fu = u.map_rows(p.dim, |t, x| f(t, x))?;
            space::sub(&fu, &f0)
        }
    };
    let pair = OperatorPair::new(a, b, prob.f_lip);
    let s = prob.space();
    let (mut a5_pass, mut a5_fail, mut a5_vacuous, mut lemma_violations) = (0, 0, 0, 0);
    let mut monitor = |it: &Iterate<'_>| -> Result<Observation> {
        let membership_ok = match radius {
            Some(r) => Some(space::norm(it.u, &s)? <= r + BALL_SLACK),
            None => None,
        };
        let a5 = geometry::check_a5_with_epsilon0(it.a_u, it.b_u, &s, eps0)?;
        let mut warning = None;
        match a5.verdict {
            Verdict::PassVacuous => a5_vacuous += 1,
            Verdict::Fail => {
                a5_fail += 1;
                warning = Some(format!("monotonicity margin {:.3e}", a5.margin));
            }
            Verdict::Pass => {
                a5_pass += 1;
                let vs = [it.a_u.clone(), it.b_u.clone()];
                let (bound, lhs) = geometry::strong_triangle_bound(&vs, &s, profile)?;
                if lhs > bound + BALL_SLACK * bound.max(1.0) {
                    lemma_violations += 1;
                    warning = Some(format!("triangle bound {bound:.6e} below |Au+Bu| {lhs:.6e}"));
                }
            }
        }
        Ok(Observation { membership_ok, a5_margin: Some(a5.margin), warning })
    };
    let zero = GridFunction::zeros(prob.grid, prob.dim);
    let report = engine::krasnoselskii_monitored(&pair, &zero, &s, opts, &mut monitor)?;
    let image = space::add(&pair.eval_a(&report.final_u)?, &pair.eval_b(&report.final_u)?)?;
    let final_image_norm = space::norm(&image, &s)?;
    if let Some(r) = radius {
        if final_image_norm > r + BALL_SLACK {
            return Err(Error::BallViolation(format!(
                "|A u + B u|_p = {final_image_norm:.6e} exceeds radius {r:.6e}"
            )));
        }
    }
    Ok(HammersteinSolution {
        report,
        certificate,
        epsilon0: eps0,
        a5_pass,
        a5_fail,
        a5_vacuous,
        lemma_violations,
        final_image_norm,
    })
}
