//! Dispatches a [`RunConfig`] to the solvers and writes the run's files:
//! CSV outputs plus a `manifest.json` describing the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::config::{Command, ConfigError, Preset, RunConfig};
use crate::elliptic::{self, BallRequest, EllipticProblem};
use crate::engine::{self, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{self, ConvexityProfile};
use crate::integral::{self, HammersteinProblem, VolterraProblem};
use crate::rng;
use crate::space::{vector_norm, Grid, GridFunction, SpaceSpec};

type StateMap = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type TimeStateMap = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "FPFORGE_SEED";

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidSpace(_)
        | Error::ShapeMismatch(_)
        | Error::Range(_)
        | Error::NotAContraction(_)
        | Error::Parse(_) => EXIT_CONFIG,
        Error::CertificateRequired(_)
        | Error::BlowupBeforeT { .. }
        | Error::BallViolation(_)
        | Error::NoEpsilon0(_) => EXIT_CERTIFICATE,
        Error::NoConvergence { .. } | Error::ContinuationStalled { .. } => EXIT_NO_CONVERGENCE,
        Error::NonFinite { .. } | Error::DegenerateAngle(_) | Error::Io(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: String,
    pub status: String,
    pub exit_code: i32,
    pub errors: Vec<ManifestError>,
    pub certificates: Vec<Certificate>,
    pub summary: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    fn new(command: Command, seed: u64, config: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            status: "ok".into(),
            exit_code: EXIT_OK,
            errors: Vec::new(),
            certificates: Vec::new(),
            summary: BTreeMap::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: RunManifest,
    /// CSV echoed to standard output by `geometry`, `certify` and `fuzz`.
    pub stdout: String,
}

struct Ctx<'a> {
    dir: &'a Path,
    manifest: RunManifest,
    stdout: String,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn summary(&mut self, key: &str, value: f64) {
        self.manifest.summary.insert(key.to_string(), value);
    }

    fn certificates_csv(&mut self, certs: &[Certificate]) -> Result<()> {
        let mut text = format!("{}\n", Certificate::CSV_HEADER);
        for c in certs {
            text.push_str(&c.csv_row());
            text.push('\n');
        }
        self.manifest.certificates.extend(certs.iter().cloned());
        self.write("certificates.csv", &text)
    }
}

/// Runs `config`, writing outputs and the manifest into its output
/// directory. Never panics on documented error paths.
pub fn run(config: &RunConfig) -> RunOutcome {
    let start = Instant::now();
    let dir = config.output_dir.as_path();
    let mut ctx = Ctx {
        dir,
        manifest: RunManifest::new(config.command, config.seed, config.to_text()),
        stdout: String::new(),
    };
    let result = fs::create_dir_all(dir).map_err(Error::from).and_then(|_| dispatch(config, &mut ctx));
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            ctx.manifest.errors.push(ManifestError { kind: e.kind().into(), message: e.to_string() });
            exit_code(&e)
        }
    };
    ctx.manifest.exit_code = code;
    ctx.manifest.status = status_name(code).into();
    ctx.manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let mut code = code;
    if let Err(e) = ctx.manifest.write(dir) {
        eprintln!("cannot write manifest: {e}");
        code = EXIT_INTERNAL;
    }
    RunOutcome { exit_code: code, manifest: ctx.manifest, stdout: ctx.stdout }
}

fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_CONFIG => "config-error",
        EXIT_CERTIFICATE => "certificate-fail",
        EXIT_NO_CONVERGENCE => "no-convergence",
        _ => "internal-error",
    }
}

/// Manifest for a configuration that did not parse. Written into `dir`
/// when possible.
pub fn config_error_manifest(dir: &Path, command: Command, errors: &[ConfigError]) -> RunManifest {
    let mut m = RunManifest::new(command, 0, String::new());
    m.exit_code = EXIT_CONFIG;
    m.status = status_name(EXIT_CONFIG).into();
    m.errors =
        errors.iter().map(|e| ManifestError { kind: "config".into(), message: e.to_string() }).collect();
    if fs::create_dir_all(dir).is_ok() {
        let _ = m.write(dir);
    }
    m
}

/// Seed after applying [`SEED_ENV`], if set to an integer.
pub fn effective_seed(configured: u64) -> std::result::Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV} must be an integer, got '{v}'")),
        Err(_) => Ok(configured),
    }
}

fn dispatch(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    match cfg.command {
        Command::SolveVolterra => run_volterra(cfg, ctx),
        Command::SolveHammerstein => run_hammerstein(cfg, ctx),
        Command::Elliptic => run_elliptic(cfg, ctx),
        Command::Geometry => run_geometry(cfg, ctx),
        Command::Certify => run_certify(cfg, ctx),
        Command::Fuzz => run_fuzz(cfg, ctx),
    }
}

fn need<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("configuration lacks '{key}'")))
}

fn solve_options(cfg: &RunConfig) -> Result<SolveOptions> {
    Ok(SolveOptions::new(need(cfg.num("tol"), "tol")?, need(cfg.count("max_outer"), "max_outer")?))
}

fn grid_of(cfg: &RunConfig) -> Result<Grid> {
    Grid::new(need(cfg.num("T"), "T")?, need(cfg.count("n_steps"), "n_steps")?)
}

fn componentwise(x: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    x.iter().map(|&v| f(v)).collect()
}

/// Builds a Volterra problem from registry presets.
pub fn volterra_problem(cfg: &RunConfig) -> Result<VolterraProblem> {
    let grid = grid_of(cfg)?;
    let dim = need(cfg.count("dim"), "dim")?;
    let (f, g) = (need(cfg.preset("f"), "f")?, need(cfg.preset("g"), "g")?);
    let (alpha, phi) = (need(cfg.preset("alpha"), "alpha")?, need(cfg.preset("phi"), "phi")?);

    let (fc, fw) = (f.arg("c"), f.arg("w0"));
    let (f_fn, f_lip): (StateMap, f64) = match f.name.as_str() {
        "affine" => (Box::new(move |x| componentwise(x, |v| fc * v + fw)), fc.abs()),
        "atan" => (Box::new(move |x| componentwise(x, |v| -fc * v.atan())), fc.abs()),
        _ => (Box::new(move |x| vec![0.0; x.len()]), 0.0),
    };
    let (gk, gc) = (g.arg("kappa"), g.arg("c"));
    let g_fn: TimeStateMap = match g.name.as_str() {
        "linear" => Box::new(move |_, x| componentwise(x, |v| gk * v)),
        "sin" => Box::new(move |_, x| componentwise(x, |v| gk * v.sin())),
        "const" => Box::new(move |_, x| vec![gc; x.len()]),
        _ => Box::new(|_, x| vec![0.0; x.len()]),
    };
    let ac = alpha.arg("c");
    let linear_alpha = alpha.name == "linear";
    let alpha_fn = move |t: f64| if linear_alpha { ac * t } else { ac };
    let (pa, pb) = (phi.arg("a"), phi.arg("b"));
    let square = phi.name == "square";
    let phi_fn = move |x: f64| if square { pa + pb * x * x } else { pa + pb * x };

    let vp = need(cfg.num("vector_p"), "vector_p")?;
    let prob = VolterraProblem::new(grid, dim, f_fn, f_lip, g_fn, alpha_fn, phi_fn).with_vector_p(vp);
    prob.validate()?;
    Ok(prob)
}

fn run_volterra(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let prob = volterra_problem(cfg)?;
    let sol = integral::solve_volterra(&prob, &solve_options(cfg)?)?;
    let report = &sol.report;
    ctx.write("solution.csv", &report.final_u.to_csv())?;
    ctx.write("report.csv", &report.to_csv())?;
    ctx.write("bound.csv", &sol.bound.to_csv())?;
    let inside = report.membership_violations == 0 && sol.tightness <= 1.0 + 1e-8;
    let b_max = sol.bound.values().iter().cloned().fold(0.0, f64::max);
    let cert = Certificate::new(
        CertificateKind::BoundB,
        if inside { Verdict::Pass } else { Verdict::Fail },
        Some(b_max),
        1.0 - sol.tightness,
    )
    .with("membership_violations", report.membership_violations as f64)
    .with("mechanism_violations", sol.mechanism_violations as f64);
    ctx.certificates_csv(&[cert])?;
    ctx.summary("iterations", report.iterations as f64);
    ctx.summary("final_residual", report.final_residual());
    ctx.summary("tightness", sol.tightness);
    let last = report.final_u.row(prob.grid.n_steps());
    ctx.summary("u_end_norm", vector_norm(last, prob.vector_p));
    ctx.summary("membership_violations", report.membership_violations as f64);
    ctx.summary("mechanism_violations", sol.mechanism_violations as f64);
    Ok(EXIT_OK)
}

fn profile_of(raw: &str) -> Result<(ConvexityProfile, f64)> {
    if raw == "hilbert" {
        return Ok((ConvexityProfile::Hilbert, 2.0));
    }
    if let Some(p) = raw.strip_prefix("lp:") {
        let p: f64 = p.parse().map_err(|_| Error::Parse(format!("bad exponent in '{raw}'")))?;
        return Ok((ConvexityProfile::lp(p)?, p));
    }
    if let Some(path) = raw.strip_prefix("table:") {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read profile table {path}: {e}")))?;
        return Ok((ConvexityProfile::from_csv(&text)?, 2.0));
    }
    Err(Error::Parse(format!("unknown profile '{raw}'")))
}

/// Builds a Hammerstein problem from registry presets, with growth bounds
/// derived from each preset.
pub fn hammerstein_problem(cfg: &RunConfig) -> Result<HammersteinProblem> {
    let grid = grid_of(cfg)?;
    let dim = need(cfg.count("dim"), "dim")?;
    let p = need(cfg.num("p"), "p")?;
    let vp = need(cfg.num("vector_p"), "vector_p")?;
    let (f, k, phi): (&Preset, &Preset, &Preset) =
        (need(cfg.preset("f"), "f")?, need(cfg.preset("k"), "k")?, need(cfg.preset("Phi"), "Phi")?);

    let kernel: Box<dyn Fn(f64, f64) -> f64 + Send + Sync> = match k.name.as_str() {
        "exp_decay" => {
            let rate = k.arg("rate");
            Box::new(move |t, s| (-rate * (t - s)).exp())
        }
        "product" => {
            let c = k.arg("c");
            Box::new(move |t, s| c * t * s)
        }
        _ => {
            let kappa = k.arg("kappa");
            Box::new(move |_, _| kappa)
        }
    };
    let mut prob = HammersteinProblem::with_kernel(grid, dim, p, kernel);
    prob.vector_p = vp;
    if f.name == "linear" {
        let (c, w0) = (f.arg("c"), f.arg("w0"));
        prob = prob.f(move |_, x| componentwise(x, |v| c * v + w0), c.abs());
    }
    // |(1, ..., 1)| in the pointwise norm.
    let ones = vector_norm(&vec![1.0; dim], vp);
    prob = match phi.name.as_str() {
        "shift" => {
            let h = phi.arg("h");
            prob.phi(move |_, v| componentwise(v, |x| x + h), |_| 1.0, move |x| h.abs() * ones + x)
        }
        "tanh" => prob.phi(|_, v| componentwise(v, f64::tanh), |_| 1.0, move |_| ones),
        _ => {
            let c = phi.arg("c");
            prob.phi(move |_, v| componentwise(v, |x| c * x), move |_| c.abs(), |x| x)
        }
    };
    prob.validate()?;
    Ok(prob)
}

fn run_hammerstein(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let prob = hammerstein_problem(cfg)?;
    let (profile, _) = profile_of(need(cfg.text("profile"), "profile")?)?;
    let ball = integral::ball_certificate_a3(&prob)?;
    ctx.summary("kernel_constant", ball.witness_value("kernel_c").unwrap_or(f64::NAN));
    let allow = cfg.flag("allow_uncertified");
    if !ball.is_pass() && !allow {
        ctx.certificates_csv(&[ball])?;
        return Err(Error::CertificateRequired(
            "ball certificate failed; set allow_uncertified = true to solve anyway".into(),
        ));
    }
    let sol = integral::solve_hammerstein(&prob, &profile, &solve_options(cfg)?, allow)?;
    let report = &sol.report;
    ctx.write("solution.csv", &report.final_u.to_csv())?;
    ctx.write("report.csv", &report.to_csv())?;
    ctx.certificates_csv(std::slice::from_ref(&sol.certificate))?;
    ctx.summary("iterations", report.iterations as f64);
    ctx.summary("final_residual", report.final_residual());
    ctx.summary("epsilon0", sol.epsilon0);
    // An EMPIRICAL table is user data, not a proven modulus.
    ctx.summary(
        "epsilon0_empirical",
        f64::from(u8::from(matches!(profile, ConvexityProfile::Empirical { .. }))),
    );
    ctx.summary("a5_pass", sol.a5_pass as f64);
    ctx.summary("a5_fail", sol.a5_fail as f64);
    ctx.summary("a5_vacuous", sol.a5_vacuous as f64);
    ctx.summary("lemma_violations", sol.lemma_violations as f64);
    ctx.summary("final_image_norm", sol.final_image_norm);
    ctx.summary("membership_violations", report.membership_violations as f64);
    let last = report.final_u.row(prob.grid.n_steps());
    ctx.summary("u_end_norm", vector_norm(last, prob.vector_p));
    Ok(EXIT_OK)
}

fn forcing(raw: &str, n: usize) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("bad forcing '{raw}'"));
    if let Some(eps) = raw.strip_prefix("sine:") {
        return Ok(elliptic::sine_forcing(n, eps.parse().map_err(|_| bad())?));
    }
    if let Some(c) = raw.strip_prefix("const:") {
        return Ok(vec![c.parse().map_err(|_| bad())?; n]);
    }
    Err(bad())
}

fn run_elliptic(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let n = need(cfg.count("n"), "n")?;
    let prob = EllipticProblem::new(
        n,
        need(cfg.num("lambda"), "lambda")?,
        need(cfg.num("mu"), "mu")?,
        need(cfg.num("p"), "p")?,
        need(cfg.num("q"), "q")?,
        need(cfg.num("a"), "a")?,
        forcing(need(cfg.text("h_preset"), "h_preset")?, n)?,
    )?;
    let mut ball = None;
    if cfg.flag("auto_mu_star") {
        let radius = need(cfg.num("R"), "R")?;
        let gamma = elliptic::gamma_estimate(&prob, prob.p_exp - 1.0, cfg.seed)?;
        let cert = elliptic::mu_star(&prob, gamma.certified(), radius)?;
        ctx.summary("gamma", gamma.value);
        ctx.summary("gamma_certified", gamma.certified());
        let ok = cert.witness_value("mu_star").is_some_and(|m| prob.mu < m);
        ctx.certificates_csv(std::slice::from_ref(&cert))?;
        if !ok {
            return Err(Error::CertificateRequired(format!(
                "mu = {} is not below mu* (certificate margin {:.6e})",
                prob.mu, cert.margin
            )));
        }
        ball = Some(BallRequest { radius, allow_uncertified: true, seed: cfg.seed });
    }
    let sol = elliptic::solve_elliptic(&prob, &solve_options(cfg)?, ball)?;
    let mut text = String::from("x,u\n0.0000000000000000e0,0.0000000000000000e0\n");
    for (x, u) in prob.nodes().iter().zip(&sol.u) {
        text.push_str(&format!("{x:.16e},{u:.16e}\n"));
    }
    text.push_str("1.0000000000000000e0,0.0000000000000000e0\n");
    ctx.write("solution.csv", &text)?;
    ctx.write("report.csv", &sol.report.to_csv())?;
    if ball.is_none() {
        ctx.certificates_csv(&[])?;
    }
    let h = prob.h();
    ctx.summary("iterations", sol.report.iterations as f64);
    ctx.summary("residual", sol.residual);
    ctx.summary("u_l2", elliptic::weighted_norm(&sol.u, h, 2.0));
    ctx.summary("v_l2", elliptic::weighted_norm(&sol.v, h, 2.0));
    ctx.summary("lambda1", prob.lambda1());
    ctx.summary("membership_violations", sol.report.membership_violations as f64);
    Ok(EXIT_OK)
}

fn csv_line(quantity: &str, value: f64, margin: Option<f64>) -> String {
    let m = margin.map(|m| format!("{m:.16e}")).unwrap_or_default();
    format!("{quantity},{value:.16e},{m}\n")
}

fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws `samples` sets of `vectors` Gaussian vectors in `R^dim` and counts
/// violations of `|sum v_i| <= sum (1 - 2 delta(alpha_i)) |v_i|`.
///
/// Returns `(violations, smallest slack)`.
pub fn lemma_fuzz(
    profile: &ConvexityProfile,
    vector_p: f64,
    dim: usize,
    vectors: usize,
    samples: usize,
    seed: u64,
) -> Result<(usize, f64)> {
    let s = SpaceSpec::sup(vector_p);
    let mut violations = 0;
    let mut slack = f64::INFINITY;
    for k in 0..samples {
        let mut rng = rng::trial_stream(seed, "geometry.lemma", k as u64);
        let vs: Vec<Vec<f64>> = (0..vectors).map(|_| gaussian_vec(&mut rng, dim)).collect();
        let (bound, lhs) = match geometry::strong_triangle_bound(&vs, &s, profile) {
            Ok(v) => v,
            Err(Error::DegenerateAngle(_)) => continue,
            Err(e) => return Err(e),
        };
        let gap = bound - lhs;
        slack = slack.min(gap);
        if gap < -1e-12 * bound.abs().max(1.0) {
            violations += 1;
        }
    }
    Ok((violations, slack))
}

fn run_geometry(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let (profile, vp) = profile_of(need(cfg.text("profile"), "profile")?)?;
    let mut out = String::from("quantity,value,margin\n");
    let mut code = EXIT_OK;
    match need(cfg.text("op"), "op")? {
        "modulus" => {
            let eps = need(cfg.num("eps"), "eps")?;
            out.push_str(&csv_line("delta", geometry::modulus(&profile, eps)?, None));
        }
        "epsilon0" => {
            let e0 = geometry::epsilon0(&profile)?;
            let gap = geometry::split_sum_min(&profile, e0)? - 0.5;
            out.push_str(&csv_line("epsilon0", e0, Some(gap)));
        }
        "triang-fuzz" => {
            let samples = need(cfg.count("samples"), "samples")?;
            let (dim, nv) = (need(cfg.count("dim"), "dim")?, need(cfg.count("vectors"), "vectors")?);
            let (violations, slack) = lemma_fuzz(&profile, vp, dim, nv, samples, cfg.seed)?;
            out.push_str(&csv_line("samples", samples as f64, None));
            out.push_str(&csv_line("violations", violations as f64, Some(slack)));
            if violations > 0 {
                code = EXIT_CERTIFICATE;
            }
        }
        _ => {
            // A(u) = e1, B(u) = -e2: directions at a right angle.
            let s = SpaceSpec::sup(vp);
            let cert = geometry::check_a5(&vec![1.0, 0.0], &vec![0.0, -1.0], &s, &profile)?;
            for name in ["alpha_a", "alpha_b", "epsilon0"] {
                out.push_str(&csv_line(name, cert.witness_value(name).unwrap_or(f64::NAN), None));
            }
            let sum =
                cert.witness_value("alpha_a").unwrap_or(0.0) + cert.witness_value("alpha_b").unwrap_or(0.0);
            out.push_str(&csv_line("a5", sum, Some(cert.margin)));
            ctx.manifest.certificates.push(cert);
        }
    }
    ctx.write("geometry.csv", &out)?;
    ctx.stdout = out;
    Ok(code)
}

fn run_certify(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let num = |k: &str| need(cfg.num(k), k);
    let cert = match need(cfg.text("kind"), "kind")? {
        "mu-star" => engine::radius_mu_star(num("p")?, num("q")?, num("a")?, num("b")?, num("lam_b")?)?,
        "power" => engine::radius_power(num("a")?, num("p")?)?,
        "c6" => engine::radius_c6(num("C")?, num("T")?, num("r")?, num("f0")?)?,
        _ => {
            let op = need(cfg.text("operator"), "operator")?.to_string();
            let b = move |u: &GridFunction| -> Result<GridFunction> {
                Ok(match op.as_str() {
                    "identity" => u.clone(),
                    "neg_cube" => u.map_rows(u.dim(), |_, x| componentwise(x, |v| -v * v * v))?,
                    _ => u.scale(-1.0),
                })
            };
            let lam = num("lambda")?;
            let template = GridFunction::zeros(Grid::new(1.0, 10)?, 1);
            engine::check_expanding(
                &b,
                &template,
                &SpaceSpec::sup(2.0),
                need(cfg.count("samples"), "samples")?,
                &[0.25 * lam, 0.5 * lam, lam],
                cfg.seed,
            )?
        }
    };
    let code = if cert.is_pass() { EXIT_OK } else { EXIT_CERTIFICATE };
    ctx.stdout = format!("{}\n{}\n", Certificate::CSV_HEADER, cert.csv_row());
    ctx.certificates_csv(&[cert])?;
    Ok(code)
}

fn run_fuzz(cfg: &RunConfig, ctx: &mut Ctx<'_>) -> Result<i32> {
    let samples = need(cfg.count("samples"), "samples")?;
    let mut out = String::from("quantity,value,margin\n");
    let failed = match need(cfg.text("target"), "target")? {
        "lemma" => {
            let (v, slack) = lemma_fuzz(&ConvexityProfile::Hilbert, 2.0, 5, 10, samples, cfg.seed)?;
            out.push_str(&csv_line("violations", v as f64, Some(slack)));
            v > 0
        }
        "resolvent" => {
            let worst = resolvent_fuzz(samples, cfg.seed)?;
            out.push_str(&csv_line("max_error", worst, Some(1e-10 - worst)));
            worst > 1e-10
        }
        _ => {
            let (chain, spread) = tube_fuzz(samples, cfg.seed)?;
            out.push_str(&csv_line("chain_excess", chain, Some(1e-8 - chain)));
            out.push_str(&csv_line("spread_excess", spread, Some(1e-8 - spread)));
            chain > 1e-8 || spread > 1e-8
        }
    };
    ctx.write("fuzz.csv", &out)?;
    ctx.stdout = out;
    Ok(if failed { EXIT_CERTIFICATE } else { EXIT_OK })
}

/// Largest error of the resolvent solver against `x = (c + w) / (1 - m)`
/// over random scalar maps `B x = m x + c`, `|m| < 1`.
pub fn resolvent_fuzz(samples: usize, seed: u64) -> Result<f64> {
    let grid = Grid::new(1.0, 4)?;
    let s = SpaceSpec::sup(2.0);
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let mut rng = rng::trial_stream(seed, "engine.resolvent", k as u64);
        let m: f64 = rng.random_range(-0.95..0.95);
        let c: f64 = rng.random_range(-5.0..5.0);
        let w: f64 = rng.random_range(-5.0..5.0);
        let b = move |u: &GridFunction| u.map_rows(1, |_, x| vec![m * x[0] + c]);
        let wf = GridFunction::constant(grid, &[w]);
        let r = engine::resolve_contraction(&b, m.abs(), &wf, &s, 1e-13, 100_000)?;
        let exact = (c + w) / (1.0 - m);
        let err = r.solution.values().iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// A scalar Volterra instance whose quadrature reproduces the tube exactly:
/// `f = 0.5`, `g(s, u) = 0.2 cos(u)`, `alpha = 0.2`, `phi = 1`.
pub fn tube_instance(n_steps: usize) -> Result<VolterraProblem> {
    let prob = VolterraProblem::new(
        Grid::new(1.0, n_steps)?,
        1,
        |_| vec![0.5],
        0.0,
        |_, x| vec![0.2 * x[0].cos()],
        |_| 0.2,
        |_| 1.0,
    );
    prob.validate()?;
    Ok(prob)
}

/// Random function with `|u(t_i)| <= b(t_i)`.
pub fn random_tube_function(
    bound: &GridFunction,
    dim: usize,
    vector_p: f64,
    rng: &mut impl Rng,
) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(bound.values().len() * dim);
    for &b in bound.values() {
        let dir = gaussian_vec(rng, dim);
        let n = vector_norm(&dir, vector_p);
        let radius = b * rng.random_range(0.0..=1.0);
        values.extend(dir.iter().map(|x| if n > 0.0 { x / n * radius } else { 0.0 }));
    }
    GridFunction::new(*bound.grid(), dim, values)
}

/// Largest tube excesses of `A u` over random tube-interior `u`.
pub fn tube_fuzz(samples: usize, seed: u64) -> Result<(f64, f64)> {
    let prob = tube_instance(200)?;
    let bound = integral::bound_b(&prob)?;
    let (mut chain, mut spread) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..samples {
        let mut rng = rng::trial_stream(seed, "integral.tube", k as u64);
        let u = random_tube_function(&bound, 1, 2.0, &mut rng)?;
        let (c, s) = integral::tube_excess(&prob, &bound, &u, true)?;
        chain = chain.max(c);
        spread = spread.max(s);
    }
    Ok((chain, spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str, cmd: Command, dir: &Path) -> RunConfig {
        let mut c = parse_config(text, cmd).unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn exit_code_table() {
        assert_eq!(exit_code(&Error::Range("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::CertificateRequired("x".into())), EXIT_CERTIFICATE);
        assert_eq!(
            exit_code(&Error::NoConvergence { iterations: 1, last_residual: 1.0 }),
            EXIT_NO_CONVERGENCE
        );
        assert_eq!(exit_code(&Error::Io("x".into())), EXIT_INTERNAL);
    }

    #[test]
    fn certify_c6_fail_sets_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&cfg("kind = c6\nr = 2\nC = 1\nT = 1", Command::Certify, dir.path()));
        assert_eq!(out.exit_code, EXIT_CERTIFICATE);
        assert!(out.stdout.starts_with("kind,verdict,radius,margin\nc6,FAIL,"));
        assert!((out.manifest.certificates[0].margin - 0.5).abs() < 1e-9);
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn geometry_epsilon0_hilbert() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&cfg("op = epsilon0", Command::Geometry, dir.path()));
        assert_eq!(out.exit_code, EXIT_OK);
        let row = out.stdout.lines().nth(1).unwrap();
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 7.0_f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn tube_fuzz_holds() {
        let (chain, spread) = tube_fuzz(20, 1).unwrap();
        assert!(chain <= 1e-8 && spread <= 1e-8, "{chain} {spread}");
    }

    #[test]
    fn resolvent_fuzz_is_accurate() {
        assert!(resolvent_fuzz(50, 2).unwrap() <= 1e-10);
    }
}
