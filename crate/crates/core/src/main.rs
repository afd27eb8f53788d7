use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpforge::config::{self, Command};
use fpforge::run::{self, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "fpforge", version, about = "Fixed-point solvers with hypothesis certificates")]
struct Cli {
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run seed (overrides `seed` in the config; FPFORGE_SEED overrides both).
    #[arg(long, global = true)]
    seed: Option<String>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Extra `key=value` setting; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Volterra equation u = f(u) + int g(s, u) ds.
    SolveVolterra {
        /// Configuration file.
        file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Hammerstein equation u = f(t, u) + Phi(t, int k u).
    SolveHammerstein {
        /// Configuration file.
        file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Semilinear Dirichlet problem on (0, 1).
    Elliptic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        /// `sine:<eps>` or `const:<c>`.
        #[arg(long)]
        h_preset: Option<String>,
        /// Certify mu < mu* on the ball of radius R before solving.
        #[arg(long)]
        auto_mu_star: bool,
        #[arg(long = "R")]
        big_r: Option<String>,
        #[arg(long)]
        tol: Option<String>,
        #[arg(long)]
        max_outer: Option<String>,
    },
    /// Modulus of convexity, epsilon0 and related checks.
    Geometry {
        #[command(flatten)]
        common: Common,
        /// `hilbert`, `lp:<p>` or `table:<csv>`.
        #[arg(long)]
        profile: Option<String>,
        /// modulus, epsilon0, triang-fuzz or a5-demo.
        #[arg(long)]
        op: Option<String>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        dim: Option<String>,
    },
    /// Radius and hypothesis certificates.
    Certify {
        #[command(flatten)]
        common: Common,
        /// mu-star, power, c6 or expanding.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        lam_b: Option<String>,
        #[arg(long = "C", allow_hyphen_values = true)]
        big_c: Option<String>,
        #[arg(long = "T")]
        big_t: Option<String>,
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        f0: Option<String>,
        /// neg, identity or neg_cube (expanding).
        #[arg(long)]
        operator: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Property fuzzing from the command line.
    Fuzz {
        #[command(flatten)]
        common: Common,
        /// lemma, resolvent or tube.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
}

fn push(out: &mut Vec<(String, String)>, key: &str, value: Option<String>) {
    if let Some(v) = value {
        out.push((key.to_string(), v));
    }
}

/// Command, config file and `key=value` overrides for a parsed command line.
fn lower(sub: Sub) -> (Command, Common, Option<PathBuf>, Vec<(String, String)>) {
    let mut kv = Vec::new();
    match sub {
        Sub::SolveVolterra { file, common } => (Command::SolveVolterra, common, file, kv),
        Sub::SolveHammerstein { file, common } => (Command::SolveHammerstein, common, file, kv),
        Sub::Elliptic { common, n, lambda, mu, p, q, a, h_preset, auto_mu_star, big_r, tol, max_outer } => {
            push(&mut kv, "n", n);
            push(&mut kv, "lambda", lambda);
            push(&mut kv, "mu", mu);
            push(&mut kv, "p", p);
            push(&mut kv, "q", q);
            push(&mut kv, "a", a);
            push(&mut kv, "h_preset", h_preset);
            if auto_mu_star {
                kv.push(("auto_mu_star".into(), "true".into()));
            }
            push(&mut kv, "R", big_r);
            push(&mut kv, "tol", tol);
            push(&mut kv, "max_outer", max_outer);
            (Command::Elliptic, common, None, kv)
        }
        Sub::Geometry { common, profile, op, eps, samples, dim } => {
            push(&mut kv, "profile", profile);
            push(&mut kv, "op", op);
            push(&mut kv, "eps", eps);
            push(&mut kv, "samples", samples);
            push(&mut kv, "dim", dim);
            (Command::Geometry, common, None, kv)
        }
        Sub::Certify { common, kind, p, q, a, b, lam_b, big_c, big_t, r, f0, operator, lambda, samples } => {
            push(&mut kv, "kind", kind);
            push(&mut kv, "p", p);
            push(&mut kv, "q", q);
            push(&mut kv, "a", a);
            push(&mut kv, "b", b);
            push(&mut kv, "lam_b", lam_b);
            push(&mut kv, "C", big_c);
            push(&mut kv, "T", big_t);
            push(&mut kv, "r", r);
            push(&mut kv, "f0", f0);
            push(&mut kv, "operator", operator);
            push(&mut kv, "lambda", lambda);
            push(&mut kv, "samples", samples);
            (Command::Certify, common, None, kv)
        }
        Sub::Fuzz { common, target, samples } => {
            push(&mut kv, "target", target);
            push(&mut kv, "samples", samples);
            (Command::Fuzz, common, None, kv)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, file, mut overrides) = lower(cli.command);
    let path = file.or(common.config);
    let fallback_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    let fail = |errors: Vec<config::ConfigError>| {
        for e in &errors {
            eprintln!("config error: {e}");
        }
        run::config_error_manifest(&fallback_dir, command, &errors);
        ExitCode::from(EXIT_CONFIG as u8)
    };

    let text = match &path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                return fail(vec![config::ConfigError {
                    line: None,
                    message: format!("cannot read {}: {e}", p.display()),
                }])
            }
        },
        None => String::new(),
    };
    let mut errors = Vec::new();
    for item in &common.set {
        match item.split_once('=') {
            Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
            None => errors.push(config::ConfigError {
                line: None,
                message: format!("--set expects KEY=VALUE, got '{item}'"),
            }),
        }
    }
    if let Some(seed) = cli.seed {
        overrides.push(("seed".into(), seed));
    }
    if let Some(out) = &cli.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    let mut cfg = match config::parse_with_overrides(&text, command, &overrides) {
        Ok(c) if errors.is_empty() => c,
        Ok(_) => return fail(errors),
        Err(mut e) => {
            e.append(&mut errors);
            return fail(e);
        }
    };
    match run::effective_seed(cfg.seed) {
        Ok(s) => cfg.seed = s,
        Err(m) => return fail(vec![config::ConfigError { line: None, message: m }]),
    }

    let outcome = run::run(&cfg);
    print!("{}", outcome.stdout);
    for e in &outcome.manifest.errors {
        eprintln!("{}: {}", e.kind, e.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
