//! One-dimensional semilinear Dirichlet problem
//! `-u'' + lambda u = mu |u|^{p-2} u + a |u|^{q-2} u + h(x)` on `(0, 1)`,
//! solved for `v = L u` (`L` the second-difference Laplacian) as the
//! fixed-point problem `v = N(L^{-1} v) - lambda L^{-1} v`.
//!
//! Vectors hold the `n` interior values; norms are h-weighted,
//! `|u|_r = (h sum |u_i|^r)^{1/r}`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::engine::{self, IterationReport, OperatorPair, SolveOptions};
use crate::error::{Error, Result};
use crate::rng;
use crate::space::{self, Grid, GridFunction, SpaceSpec};

/// Random directions tried by [`gamma_estimate`].
pub const GAMMA_SAMPLES: usize = 10_000;
/// Inflation applied to the sampled `gamma` before it enters a certificate.
pub const GAMMA_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem {
    pub n_interior: usize,
    pub lambda: f64,
    pub mu: f64,
    pub p_exp: f64,
    pub q_exp: f64,
    pub a_coef: f64,
    /// Forcing at the interior nodes.
    pub h_data: Vec<f64>,
}

impl EllipticProblem {
    pub fn new(
        n_interior: usize,
        lambda: f64,
        mu: f64,
        p_exp: f64,
        q_exp: f64,
        a_coef: f64,
        h_data: Vec<f64>,
    ) -> Result<Self> {
        let prob = Self { n_interior, lambda, mu, p_exp, q_exp, a_coef, h_data };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_interior == 0 {
            return Err(Error::InvalidGrid("need at least one interior point".into()));
        }
        if self.h_data.len() != self.n_interior {
            return Err(Error::ShapeMismatch(format!(
                "forcing has {} values for {} interior points",
                self.h_data.len(),
                self.n_interior
            )));
        }
        if let Some(i) = self.h_data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i, component: 0 });
        }
        if !(self.p_exp > 2.0 && self.p_exp.is_finite()) {
            return Err(Error::Range(format!("p must exceed 2, got {}", self.p_exp)));
        }
        if !(1.5..2.0).contains(&self.q_exp) {
            return Err(Error::Range(format!("q must lie in [3/2, 2), got {}", self.q_exp)));
        }
        if !(self.a_coef >= 0.0 && self.a_coef.is_finite()) {
            return Err(Error::Range(format!("a must be >= 0, got {}", self.a_coef)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Range(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Range("lambda must be finite".into()));
        }
        Ok(())
    }

    /// Mesh width `1 / (n + 1)`.
    pub fn h(&self) -> f64 {
        1.0 / (self.n_interior + 1) as f64
    }

    /// Interior nodes `x_i = i h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (1..=self.n_interior).map(|i| i as f64 * h).collect()
    }

    /// Smallest eigenvalue `(2/h^2)(1 - cos(pi h))` of the discrete Laplacian.
    pub fn lambda1(&self) -> f64 {
        let h = self.h();
        2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h).cos())
    }

    pub fn h_norm(&self) -> f64 {
        weighted_norm(&self.h_data, self.h(), 2.0)
    }

    /// `N(w)_i = mu |w_i|^{p-2} w_i + a |w_i|^{q-2} w_i + h_i`.
    pub fn nemytskii(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.h_data)
            .map(|(&x, &f)| {
                self.mu * signed_power(x, self.p_exp - 1.0)
                    + self.a_coef * signed_power(x, self.q_exp - 1.0)
                    + f
            })
            .collect()
    }
}

/// `sign(x) |x|^e`.
fn signed_power(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// `forcing = eps sin(pi x)` at the interior nodes of an `n`-point mesh.
pub fn sine_forcing(n_interior: usize, eps: f64) -> Vec<f64> {
    let h = 1.0 / (n_interior + 1) as f64;
    (1..=n_interior).map(|i| eps * (std::f64::consts::PI * i as f64 * h).sin()).collect()
}

/// `(h sum |u_i|^r)^{1/r}`, or `max |u_i|` for infinite `r`.
pub fn weighted_norm(u: &[f64], h: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return u.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    (h * u.iter().map(|x| x.abs().powf(r)).sum::<f64>()).powf(1.0 / r)
}

/// h-weighted inner product.
pub fn weighted_dot(u: &[f64], v: &[f64], h: f64) -> f64 {
    h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// `L u` with `(L u)_i = -(u_{i+1} - 2 u_i + u_{i-1}) / h^2`, zero boundary.
pub fn laplacian_apply(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h = 1.0 / (n + 1) as f64;
    let ih2 = 1.0 / (h * h);
    (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            ih2 * (2.0 * u[i] - left - right)
        })
        .collect()
}

/// Solves `(L + shift I) u = w` with the Thomas algorithm.
pub fn shifted_solve(shift: f64, w: &[f64]) -> Result<Vec<f64>> {
    let n = w.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = 1.0 / (n + 1) as f64;
    let ih2 = 1.0 / (h * h);
    let (diag, off) = (2.0 * ih2 + shift, -ih2);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag;
    if denom == 0.0 {
        return Err(Error::Range(format!("shift {shift} makes the system singular")));
    }
    c[0] = off / denom;
    d[0] = w[0] / denom;
    for i in 1..n {
        denom = diag - off * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Range(format!("shift {shift} makes the system singular")));
        }
        c[i] = off / denom;
        d[i] = (w[i] - off * d[i - 1]) / denom;
    }
    let mut u = d;
    for i in (0..n - 1).rev() {
        u[i] -= c[i] * u[i + 1];
    }
    Ok(u)
}

/// `L^{-1} w`.
pub fn laplacian_inverse(prob: &EllipticProblem, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != prob.n_interior {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for {} interior points",
            w.len(),
            prob.n_interior
        )));
    }
    shifted_solve(0.0, w)
}

/// Sampled lower estimate of the best constant in `|L^{-1} v|_{2p} <= gamma |v|_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Largest ratio found; a lower bound for the true constant.
    pub value: f64,
    pub safety: f64,
    /// Direction attaining `value`.
    pub witness: Vec<f64>,
}

impl GammaEstimate {
    /// `value * safety`, the constant used in certificates.
    pub fn certified(&self) -> f64 {
        self.value * self.safety
    }
}

fn gamma_ratio(prob: &EllipticProblem, v: &[f64], r: f64) -> Result<f64> {
    let h = prob.h();
    let nv = weighted_norm(v, h, 2.0);
    if nv == 0.0 {
        return Ok(0.0);
    }
    Ok(weighted_norm(&laplacian_inverse(prob, v)?, h, r) / nv)
}

/// Polishes `v` by the nonlinear power iteration `v <- K J_r(K v)`,
/// `J_r(w) = |w|^{r-2} w`, which does not decrease the ratio.
fn polish(prob: &EllipticProblem, mut v: Vec<f64>, r: f64, steps: usize) -> Result<(f64, Vec<f64>)> {
    let h = prob.h();
    let mut best = (gamma_ratio(prob, &v, r)?, v.clone());
    for _ in 0..steps {
        let kv = laplacian_inverse(prob, &v)?;
        let j: Vec<f64> = kv.iter().map(|&x| signed_power(x, r - 1.0)).collect();
        let next = laplacian_inverse(prob, &j)?;
        let nn = weighted_norm(&next, h, 2.0);
        if !(nn > 0.0 && nn.is_finite()) {
            break;
        }
        v = next.iter().map(|x| x / nn).collect();
        let ratio = gamma_ratio(prob, &v, r)?;
        let gain = ratio - best.0;
        if ratio > best.0 {
            best = (ratio, v.clone());
        }
        if gain <= 1e-14 * best.0 {
            break;
        }
    }
    Ok(best)
}

/// Estimates `gamma` for `|w|_{2 p_exp} <= gamma |L w|_2` from
/// [`GAMMA_SAMPLES`] Gaussian directions, then polishes the best candidate
/// and the lowest sine mode.
pub fn gamma_estimate(prob: &EllipticProblem, p_exp: f64, seed: u64) -> Result<GammaEstimate> {
    if !(p_exp >= 1.0 && p_exp.is_finite()) {
        return Err(Error::Range(format!("gamma needs p >= 1, got {p_exp}")));
    }
    let r = 2.0 * p_exp;
    let n = prob.n_interior;
    let mut rng = rng::substream(seed, "elliptic.gamma");
    let mut best = (0.0, vec![0.0; n]);
    for _ in 0..GAMMA_SAMPLES {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let ratio = gamma_ratio(prob, &v, r)?;
        if ratio > best.0 {
            best = (ratio, v);
        }
    }
    let from_sample = polish(prob, best.1, r, 500)?;
    let from_mode = polish(prob, sine_forcing(n, 1.0), r, 500)?;
    let (value, witness) = if from_mode.0 > from_sample.0 { from_mode } else { from_sample };
    Ok(GammaEstimate { value, safety: GAMMA_SAFETY, witness })
}

/// `mu* = (R - a gamma^{q-1} R^{q-1} - |h|_2) / (gamma^{p-1} R^{p-1})`.
///
/// PASS when the numerator is positive; the margin is `mu*` itself.
pub fn mu_star(prob: &EllipticProblem, gamma: f64, big_r: f64) -> Result<Certificate> {
    if !(gamma > 0.0 && big_r > 0.0) {
        return Err(Error::Range(format!("gamma and R must be positive, got {gamma} and {big_r}")));
    }
    let numerator = big_r - prob.a_coef * (gamma * big_r).powf(prob.q_exp - 1.0) - prob.h_norm();
    let cert = if numerator > 0.0 {
        let value = numerator / (gamma * big_r).powf(prob.p_exp - 1.0);
        Certificate::new(CertificateKind::MuStar, Verdict::Pass, Some(big_r), value).with("mu_star", value)
    } else {
        Certificate::new(CertificateKind::MuStar, Verdict::Fail, Some(big_r), numerator)
    };
    Ok(cert.with("numerator", numerator).with("gamma", gamma))
}

/// `mu*` as a number, `None` when the certificate fails.
pub fn mu_star_value(prob: &EllipticProblem, gamma: f64, big_r: f64) -> Result<Option<f64>> {
    let c = mu_star(prob, gamma, big_r)?;
    Ok(c.witness_value("mu_star"))
}

/// Ball check requested for [`solve_elliptic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallRequest {
    pub radius: f64,
    /// Solve even when `mu >= mu*`.
    pub allow_uncertified: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    /// Interior values of `u`.
    pub u: Vec<f64>,
    /// `v = L u`, the fixed-point variable.
    pub v: Vec<f64>,
    pub report: IterationReport,
    /// `|v + lambda u - N(u)|_2`.
    pub residual: f64,
    pub certificates: Vec<Certificate>,
    pub gamma: Option<GammaEstimate>,
}

fn embed(grid: Grid, v: &[f64]) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(v.len() + 2);
    values.push(0.0);
    values.extend_from_slice(v);
    values.push(0.0);
    GridFunction::new(grid, 1, values)
}

fn interior(u: &GridFunction) -> &[f64] {
    let vals = u.values();
    &vals[1..vals.len() - 1]
}

/// `|v + lambda L^{-1} v - N(L^{-1} v)|_2`.
pub fn fixed_point_residual(prob: &EllipticProblem, v: &[f64]) -> Result<f64> {
    let u = laplacian_inverse(prob, v)?;
    let n = prob.nemytskii(&u);
    let r: Vec<f64> = (0..v.len()).map(|i| v[i] + prob.lambda * u[i] - n[i]).collect();
    Ok(weighted_norm(&r, prob.h(), 2.0))
}

/// Solves the discrete problem.
///
/// For `lambda >= 0` the pair `(N L^{-1}, -L^{-1})` is rescaled so that its
/// second operator contracts; for `-lambda_1 < lambda < 0` the operator
/// `|lambda| L^{-1}` already contracts.
pub fn solve_elliptic(
    prob: &EllipticProblem,
    opts: &SolveOptions,
    ball: Option<BallRequest>,
) -> Result<EllipticSolution> {
    prob.validate()?;
    let l1 = prob.lambda1();
    if prob.lambda <= -l1 * (1.0 - 1e-6) {
        return Err(Error::Range(format!("lambda = {} must exceed -lambda_1 = {}", prob.lambda, -l1)));
    }
    let mut certificates = Vec::new();
    let mut gamma = None;
    if let Some(req) = ball {
        let g = gamma_estimate(prob, prob.p_exp - 1.0, req.seed)?;
        let cert = mu_star(prob, g.certified(), req.radius)?;
        let ok = cert.is_pass() && cert.witness_value("mu_star").is_some_and(|m| prob.mu < m);
        if !ok && !req.allow_uncertified {
            return Err(Error::CertificateRequired(format!(
                "mu = {} is not below the certified mu* (margin {:.6e})",
                prob.mu, cert.margin
            )));
        }
        certificates.push(cert);
        gamma = Some(g);
    }

    let grid = Grid::new(1.0, prob.n_interior + 1)?;
    let s = SpaceSpec::lp(2.0, 2.0);
    let pa = prob.clone();
    let a = move |v: &GridFunction| {
        let u = laplacian_inverse(&pa, interior(v))?;
        embed(*v.grid(), &pa.nemytskii(&u))
    };
    let pb = prob.clone();
    let b = move |v: &GridFunction| {
        let u = laplacian_inverse(&pb, interior(v))?;
        embed(*v.grid(), &u.iter().map(|x| -x).collect::<Vec<_>>())
    };
    let (pair, tol) = if prob.lambda >= 0.0 {
        let base = OperatorPair::new(a, b, 1.0 / l1);
        let c = prob.lambda / l1;
        // Residuals of the rescaled pair are those of the original over 1 + c.
        (engine::reduce_parameter(&base, prob.lambda)?, opts.tol / (1.0 + c))
    } else {
        let lam = -prob.lambda;
        let b_neg = move |v: &GridFunction| b(v).map(|w| w.scale(-lam));
        (OperatorPair::new(a, b_neg, lam / l1), opts.tol)
    };
    let engine_opts = SolveOptions { tol, ..*opts };

    let radius = ball.map(|r| r.radius);
    let membership = move |v: &GridFunction| match radius {
        Some(r) => space::norm(v, &s).map(|n| n <= r + 1e-8).unwrap_or(false),
        None => true,
    };
    let zero = GridFunction::zeros(grid, 1);
    let member: Option<engine::Membership<'_>> = if radius.is_some() { Some(&membership) } else { None };
    let report = engine::krasnoselskii_solve(&pair, &zero, &s, &engine_opts, member)?;
    let v = interior(&report.final_u).to_vec();
    let u = laplacian_inverse(prob, &v)?;
    let residual = fixed_point_residual(prob, &v)?;
    Ok(EllipticSolution { u, v, report, residual, certificates, gamma })
}

/// Small-forcing check: `|A v|_2 <= gamma^{p-1} |v|_2^{p-1}` gives the
/// power certificate with `a = gamma^{p-1}` and exponent `p - 1`.
pub fn small_forcing_certificate(prob: &EllipticProblem, seed: u64) -> Result<(Certificate, GammaEstimate)> {
    let g = gamma_estimate(prob, prob.p_exp - 1.0, seed)?;
    let a = g.certified().powf(prob.p_exp - 1.0);
    let cert = engine::radius_power(a, prob.p_exp - 1.0)?;
    Ok((cert, g))
}
