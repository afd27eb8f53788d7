//! Sum-of-operators fixed-point engine.
//!
//! Solves `u = A(u) + B(u)` where `B` is a contraction by iterating
//! `T = (I - B)^{-1} o A`: each outer step computes `w = A(u_k)` and then the
//! unique `u_{k+1}` with `u_{k+1} = B(u_{k+1}) + w` by Banach iteration.
//! [`continuation_solve`] walks `u = A(u) + lambda_n B(u)` up to
//! `lambda = 1`, and [`reduce_parameter`] rewrites `u = A(u) + lambda B(u)`
//! as an equivalent pair whose `B` part is a contraction.

mod certify;

use std::fmt;
use std::sync::Arc;

pub use certify::{check_expanding, radius_c6, radius_mu_star, radius_mu_star_in, radius_power};

use crate::error::{Error, Result};
use crate::space::{self, GridFunction, SpaceSpec};

/// Pure operator on grid functions.
pub type Evaluator = Arc<dyn Fn(&GridFunction) -> Result<GridFunction> + Send + Sync>;

/// The pair `(A, B)` plus the Lipschitz constant of `B`.
#[derive(Clone)]
pub struct OperatorPair {
    pub a: Evaluator,
    pub b: Evaluator,
    pub b_lip: f64,
    /// Free-form growth descriptors (for example `gamma`, `mu_star`).
    pub metadata: Vec<(String, f64)>,
}

impl fmt::Debug for OperatorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPair")
            .field("b_lip", &self.b_lip)
            .field("metadata", &self.metadata)
            .finish_non_exhaustive()
    }
}

impl OperatorPair {
    pub fn new<FA, FB>(a: FA, b: FB, b_lip: f64) -> Self
    where
        FA: Fn(&GridFunction) -> Result<GridFunction> + Send + Sync + 'static,
        FB: Fn(&GridFunction) -> Result<GridFunction> + Send + Sync + 'static,
    {
        Self { a: Arc::new(a), b: Arc::new(b), b_lip, metadata: Vec::new() }
    }

    pub fn with_metadata(mut self, key: &str, value: f64) -> Self {
        self.metadata.push((key.to_string(), value));
        self
    }

    pub fn eval_a(&self, u: &GridFunction) -> Result<GridFunction> {
        checked(&self.a, u)
    }

    pub fn eval_b(&self, u: &GridFunction) -> Result<GridFunction> {
        checked(&self.b, u)
    }

    /// `|u - A(u) - B(u)|` in `s`.
    pub fn residual(&self, u: &GridFunction, s: &SpaceSpec) -> Result<f64> {
        let au = self.eval_a(u)?;
        let bu = self.eval_b(u)?;
        space::norm(&space::sub(&space::sub(u, &au)?, &bu)?, s)
    }
}

fn checked(op: &Evaluator, u: &GridFunction) -> Result<GridFunction> {
    let out = op(u)?;
    u.check_compatible(&out)?;
    Ok(out)
}

/// The operator `u -> 0`.
pub fn zero_operator() -> Evaluator {
    Arc::new(|u: &GridFunction| Ok(GridFunction::zeros(*u.grid(), u.dim())))
}

/// Iteration limits and tolerance for the outer/inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Outer residual tolerance in the solve's norm.
    pub tol: f64,
    pub max_outer: usize,
    /// Budget for each inner resolvent solve.
    pub max_inner: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_outer: 500, max_inner: 100_000 }
    }
}

impl SolveOptions {
    pub fn new(tol: f64, max_outer: usize) -> Self {
        Self { tol, max_outer, ..Self::default() }
    }

    /// Inner tolerance, a tenth of the outer one.
    pub fn inner_tol(&self) -> f64 {
        self.tol / 10.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Range(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Output of [`resolve_contraction`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent {
    pub solution: GridFunction,
    pub iterations: usize,
    /// `|u - B(u) - w|` at the returned `u`.
    pub residual: f64,
    /// `|u_1 - u_0|`, the scale of the a-priori error bound.
    pub first_step: f64,
    /// Iterations sufficient by the a-priori bound `L^k |u_1 - u_0| <= tol`.
    pub apriori_iterations: Option<usize>,
}

/// Solves `u = B(u) + w` by `u_{k+1} = B(u_k) + w`, `u_0 = w`.
pub fn resolve_contraction(
    b: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    b_lip: f64,
    w: &GridFunction,
    s: &SpaceSpec,
    tol: f64,
    max_iter: usize,
) -> Result<Resolvent> {
    resolve_contraction_observed(b, b_lip, w, s, tol, max_iter, &mut |_, _| {})
}

/// [`resolve_contraction`] calling `observer(k, u_k)` on every iterate.
pub fn resolve_contraction_observed(
    b: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    b_lip: f64,
    w: &GridFunction,
    s: &SpaceSpec,
    tol: f64,
    max_iter: usize,
    observer: &mut dyn FnMut(usize, &GridFunction),
) -> Result<Resolvent> {
    if !(b_lip < 1.0) || !b_lip.is_finite() || b_lip < 0.0 {
        return Err(Error::NotAContraction(b_lip));
    }
    if !(tol > 0.0) {
        return Err(Error::Range(format!("tol must be positive, got {tol}")));
    }
    let step_map = |u: &GridFunction| -> Result<GridFunction> {
        let bu = b(u)?;
        u.check_compatible(&bu)?;
        space::add(&bu, w)
    };
    banach_loop(step_map, b_lip, w, s, tol, max_iter, observer)
}

fn banach_loop<F>(
    step_map: F,
    b_lip: f64,
    w: &GridFunction,
    s: &SpaceSpec,
    tol: f64,
    max_iter: usize,
    observer: &mut dyn FnMut(usize, &GridFunction),
) -> Result<Resolvent>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let mut u = w.clone();
    observer(0, &u);
    let mut next = step_map(&u)?;
    let mut first_step = None;
    let mut apriori = None;
    let mut k = 0;
    loop {
        // |u_k - u_{k+1}| is exactly the resolvent residual of u_k.
        let res = space::norm(&space::sub(&u, &next)?, s)?;
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        if first_step.is_none() {
            first_step = Some(res);
            apriori = apriori_count(b_lip, res, tol);
        }
        if res <= tol {
            return Ok(Resolvent {
                solution: u,
                iterations: k,
                residual: res,
                first_step: first_step.unwrap_or(0.0),
                apriori_iterations: apriori,
            });
        }
        if k >= max_iter {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        u = next;
        k += 1;
        observer(k, &u);
        next = step_map(&u)?;
    }
}

fn apriori_count(lip: f64, first: f64, tol: f64) -> Option<usize> {
    if first <= tol {
        return Some(0);
    }
    if lip == 0.0 {
        return Some(1);
    }
    if lip >= 1.0 {
        return None;
    }
    Some(((tol / first).ln() / lip.ln()).ceil().max(0.0) as usize)
}

/// Solves `u = B(u) + w` for nonexpansive `B` with the averaged iteration
/// `u <- (u + B(u) + w) / 2` under a fixed budget.
pub fn resolve_nonexpansive(
    b: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    w: &GridFunction,
    s: &SpaceSpec,
    tol: f64,
    max_iter: usize,
) -> Result<Resolvent> {
    let mut u = w.clone();
    let mut first_step = None;
    for k in 0..=max_iter {
        let bu = b(&u)?;
        u.check_compatible(&bu)?;
        let t = space::add(&bu, w)?;
        let res = space::norm(&space::sub(&u, &t)?, s)?;
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        first_step.get_or_insert(res);
        if res <= tol {
            return Ok(Resolvent {
                solution: u,
                iterations: k,
                residual: res,
                first_step: first_step.unwrap_or(0.0),
                apriori_iterations: None,
            });
        }
        if k == max_iter {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        u = space::axpy(0.5, &u, &t.scale(0.5))?;
    }
    unreachable!("loop returns on its last iteration")
}

/// One outer iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub inner_iterations: usize,
    pub membership_ok: Option<bool>,
    pub a5_margin: Option<f64>,
}

/// Trace and outcome of an outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub converged: bool,
    /// Number of outer steps taken (resolvent solves).
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    pub inner_iterations: usize,
    pub membership_violations: usize,
    pub final_u: GridFunction,
    pub warnings: Vec<String>,
}

impl IterationReport {
    /// `|u_k - A(u_k) - B(u_k)|` per iterate.
    pub fn residual_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map(|r| r.residual).unwrap_or(f64::NAN)
    }

    pub const CSV_HEADER: &'static str = "iter,residual,membership_ok,a5_margin";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.records {
            let m = r.membership_ok.map(|b| b.to_string()).unwrap_or_default();
            let a = r.a5_margin.map(|v| format!("{v:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.16e},{},{}\n", r.iter, r.residual, m, a));
        }
        out
    }
}

/// What the engine shows a [`Monitor`] at each outer iterate.
pub struct Iterate<'a> {
    pub iter: usize,
    pub u: &'a GridFunction,
    pub a_u: &'a GridFunction,
    pub b_u: &'a GridFunction,
    /// `A(v)` for the previous iterate `v`, so that `u = B(u) + driver`.
    pub driver: Option<&'a GridFunction>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observation {
    pub membership_ok: Option<bool>,
    pub a5_margin: Option<f64>,
    pub warning: Option<String>,
}

/// Per-iterate diagnostics hook.
pub trait Monitor {
    fn observe(&mut self, it: &Iterate<'_>) -> Result<Observation>;
}

impl<F> Monitor for F
where
    F: FnMut(&Iterate<'_>) -> Result<Observation>,
{
    fn observe(&mut self, it: &Iterate<'_>) -> Result<Observation> {
        self(it)
    }
}

/// Monitor that observes nothing.
pub struct NoMonitor;

impl Monitor for NoMonitor {
    fn observe(&mut self, _it: &Iterate<'_>) -> Result<Observation> {
        Ok(Observation::default())
    }
}

/// Membership predicate on iterates, the runtime form of an invariant set.
pub type Membership<'a> = &'a dyn Fn(&GridFunction) -> bool;

/// Outer iteration `u_{k+1} = (I - B)^{-1} A(u_k)`.
///
/// Iterates failing `membership` are counted, not rejected.
pub fn krasnoselskii_solve(
    pair: &OperatorPair,
    u0: &GridFunction,
    s: &SpaceSpec,
    opts: &SolveOptions,
    membership: Option<Membership<'_>>,
) -> Result<IterationReport> {
    let mut monitor = |it: &Iterate<'_>| -> Result<Observation> {
        Ok(Observation { membership_ok: membership.map(|m| m(it.u)), ..Default::default() })
    };
    krasnoselskii_monitored(pair, u0, s, opts, &mut monitor)
}

/// [`krasnoselskii_solve`] with a general per-iterate monitor.
pub fn krasnoselskii_monitored(
    pair: &OperatorPair,
    u0: &GridFunction,
    s: &SpaceSpec,
    opts: &SolveOptions,
    monitor: &mut dyn Monitor,
) -> Result<IterationReport> {
    if !(pair.b_lip < 1.0) || pair.b_lip < 0.0 {
        return Err(Error::NotAContraction(pair.b_lip));
    }
    outer_loop(pair, u0, s, opts, monitor, InnerMethod::Banach)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerMethod {
    Banach,
    Averaged,
}

fn outer_loop(
    pair: &OperatorPair,
    u0: &GridFunction,
    s: &SpaceSpec,
    opts: &SolveOptions,
    monitor: &mut dyn Monitor,
    inner: InnerMethod,
) -> Result<IterationReport> {
    opts.validate()?;
    s.validate()?;
    let b = |u: &GridFunction| pair.eval_b(u);
    let mut u = u0.clone();
    let mut driver: Option<GridFunction> = None;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut inner_total = 0;
    let mut violations = 0;
    let mut last_inner = 0;
    for k in 0..=opts.max_outer {
        let au = pair.eval_a(&u)?;
        let bu = pair.eval_b(&u)?;
        let res = space::norm(&space::sub(&space::sub(&u, &au)?, &bu)?, s)?;
        let obs =
            monitor.observe(&Iterate { iter: k, u: &u, a_u: &au, b_u: &bu, driver: driver.as_ref() })?;
        if obs.membership_ok == Some(false) {
            violations += 1;
        }
        if let Some(w) = obs.warning {
            warnings.push(format!("iter {k}: {w}"));
        }
        records.push(IterationRecord {
            iter: k,
            residual: res,
            inner_iterations: last_inner,
            membership_ok: obs.membership_ok,
            a5_margin: obs.a5_margin,
        });
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        if res <= opts.tol {
            return Ok(IterationReport {
                converged: true,
                iterations: k,
                records,
                inner_iterations: inner_total,
                membership_violations: violations,
                final_u: u,
                warnings,
            });
        }
        if k == opts.max_outer {
            return Err(Error::NoConvergence { iterations: k, last_residual: res });
        }
        let r = match inner {
            InnerMethod::Banach => {
                resolve_contraction(&b, pair.b_lip, &au, s, opts.inner_tol(), opts.max_inner)?
            }
            InnerMethod::Averaged => resolve_nonexpansive(&b, &au, s, opts.inner_tol(), opts.max_inner)?,
        };
        last_inner = r.iterations;
        inner_total += r.iterations;
        u = r.solution;
        driver = Some(au);
    }
    unreachable!("loop returns on its last iteration")
}

/// One stage `u = A(u) + lambda B(u)` of a continuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub lambda: f64,
    pub report: IterationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationReport {
    pub stages: Vec<StageReport>,
}

impl ContinuationReport {
    /// The `lambda = 1` stage.
    pub fn final_stage(&self) -> &IterationReport {
        &self.stages.last().expect("continuation has at least one stage").report
    }
}

/// `lambda B` as an operator pair with `A`.
fn scaled_stage(pair: &OperatorPair, lambda: f64) -> OperatorPair {
    let b = pair.b.clone();
    OperatorPair {
        a: pair.a.clone(),
        b: Arc::new(move |u: &GridFunction| Ok(b(u)?.scale(lambda))),
        b_lip: lambda * pair.b_lip,
        metadata: pair.metadata.clone(),
    }
}

/// Solves `u = A(u) + lambda_n B(u)` for each `lambda_n`, warm-starting
/// every stage from the previous solution. A final stage with
/// `lambda * b_lip = 1` (nonexpansive `B`) uses averaged inner iterations.
pub fn continuation_solve(
    pair: &OperatorPair,
    lambdas: &[f64],
    u0: &GridFunction,
    s: &SpaceSpec,
    opts: &SolveOptions,
) -> Result<ContinuationReport> {
    match lambdas.last() {
        None => return Err(Error::Range("lambda schedule is empty".into())),
        Some(&l) if l != 1.0 => {
            return Err(Error::Range(format!("lambda schedule must end at 1, ends at {l}")))
        }
        _ => {}
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::Range("every lambda must lie in (0, 1]".into()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Range("lambda schedule must be nondecreasing".into()));
    }
    if !(pair.b_lip <= 1.0) {
        return Err(Error::NotAContraction(pair.b_lip));
    }
    let mut stages: Vec<StageReport> = Vec::new();
    let mut start = u0.clone();
    for &lambda in lambdas {
        let stage = scaled_stage(pair, lambda);
        let outcome = if stage.b_lip < 1.0 {
            outer_loop(&stage, &start, s, opts, &mut NoMonitor, InnerMethod::Banach)
        } else {
            outer_loop(&stage, &start, s, opts, &mut NoMonitor, InnerMethod::Averaged)
        };
        match outcome {
            Ok(report) => {
                start = report.final_u.clone();
                stages.push(StageReport { lambda, report });
            }
            Err(cause) => {
                return Err(Error::ContinuationStalled {
                    lambda,
                    last_completed: stages.pop().map(Box::new),
                    cause: Box::new(cause),
                })
            }
        }
    }
    Ok(ContinuationReport { stages })
}

/// Builds `(A', B')` with `A' + B'` having the same fixed points as
/// `A + lambda B`:
/// `A'(u) = (A(u) + c u) / (1 + c)`, `B'(u) = lambda B(u) / (1 + c)`,
/// `c = lambda * b_lip`, so `B'` is a `c / (1 + c)`-contraction.
pub fn reduce_parameter(pair: &OperatorPair, lambda: f64) -> Result<OperatorPair> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Range(format!("lambda must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(OperatorPair {
            a: pair.a.clone(),
            b: zero_operator(),
            b_lip: 0.0,
            metadata: pair.metadata.clone(),
        });
    }
    let c = lambda * pair.b_lip;
    let denom = 1.0 + c;
    let (a, b) = (pair.a.clone(), pair.b.clone());
    Ok(OperatorPair {
        a: Arc::new(move |u: &GridFunction| {
            let au = a(u)?;
            Ok(space::axpy(c, u, &au)?.scale(1.0 / denom))
        }),
        b: Arc::new(move |u: &GridFunction| Ok(b(u)?.scale(lambda / denom))),
        b_lip: c / denom,
        metadata: pair.metadata.clone(),
    })
}
