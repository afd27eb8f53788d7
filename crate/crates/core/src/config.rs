//! Flat `key = value` run configuration.
//!
//! Nonlinearities are chosen from a fixed registry of parametric families,
//! written `name(arg=value, ...)`, for example `f = affine(c=0.5, w0=1)`.
//! `#` starts a comment. Every subcommand accepts `seed` and `out`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    SolveVolterra,
    SolveHammerstein,
    Elliptic,
    Geometry,
    Certify,
    Fuzz,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::SolveVolterra,
        Command::SolveHammerstein,
        Command::Elliptic,
        Command::Geometry,
        Command::Certify,
        Command::Fuzz,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::SolveVolterra => "solve-volterra",
            Command::SolveHammerstein => "solve-hammerstein",
            Command::Elliptic => "elliptic",
            Command::Geometry => "geometry",
            Command::Certify => "certify",
            Command::Fuzz => "fuzz",
        }
    }

    pub fn schema(&self) -> &'static [KeySpec] {
        match self {
            Command::SolveVolterra => VOLTERRA_KEYS,
            Command::SolveHammerstein => HAMMERSTEIN_KEYS,
            Command::Elliptic => ELLIPTIC_KEYS,
            Command::Geometry => GEOMETRY_KEYS,
            Command::Certify => CERTIFY_KEYS,
            Command::Fuzz => FUZZ_KEYS,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Families of built-in nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `f: R^d -> R^d` of a Volterra problem.
    VolterraF,
    /// `g(t, u)` of a Volterra problem.
    VolterraG,
    /// `alpha(t)` in the growth bound of `g`.
    Alpha,
    /// `phi(|u|)` in the growth bound of `g`.
    Phi,
    /// `f(t, x)` of a Hammerstein problem.
    HammersteinF,
    Kernel,
    /// Outer nonlinearity of a Hammerstein problem.
    HammersteinPhi,
}

type PresetDef = (&'static str, &'static [(&'static str, f64)]);

impl Family {
    /// Preset names with their parameters and defaults.
    pub fn registry(&self) -> &'static [PresetDef] {
        match self {
            Family::VolterraF => {
                &[("affine", &[("c", 0.5), ("w0", 1.0)]), ("atan", &[("c", 0.5)]), ("zero", &[])]
            }
            Family::VolterraG => &[
                ("linear", &[("kappa", 0.5)]),
                ("sin", &[("kappa", 1.0)]),
                ("const", &[("c", 1.0)]),
                ("zero", &[]),
            ],
            Family::Alpha => &[("const", &[("c", 0.5)]), ("linear", &[("c", 1.0)])],
            Family::Phi => &[("affine", &[("a", 1.0), ("b", 1.0)]), ("square", &[("a", 1.0), ("b", 1.0)])],
            Family::HammersteinF => &[("zero", &[]), ("linear", &[("c", -0.5), ("w0", 0.0)])],
            Family::Kernel => {
                &[("const", &[("kappa", 1.0)]), ("exp_decay", &[("rate", 1.0)]), ("product", &[("c", 1.0)])]
            }
            Family::HammersteinPhi => &[("shift", &[("h", 1.0)]), ("tanh", &[]), ("linear", &[("c", 1.0)])],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Family::VolterraF | Family::HammersteinF => "f",
            Family::VolterraG => "g",
            Family::Alpha => "alpha",
            Family::Phi => "phi",
            Family::Kernel => "k",
            Family::HammersteinPhi => "Phi",
        }
    }
}

/// A registry entry with every parameter filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub args: Vec<(String, f64)>,
}

impl Preset {
    pub fn arg(&self, name: &str) -> f64 {
        self.args.iter().find(|(k, _)| k == name).map(|(_, v)| *v).unwrap_or(f64::NAN)
    }

    fn parse(raw: &str, family: Family) -> Result<Self, String> {
        let raw = raw.trim();
        let (name, body) = match raw.find('(') {
            Some(i) => {
                let body = raw[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("preset '{raw}' is missing a closing parenthesis"))?;
                (raw[..i].trim(), body)
            }
            None => (raw, ""),
        };
        let (_, params) = family.registry().iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let known: Vec<&str> = family.registry().iter().map(|(n, _)| *n).collect();
            format!("unknown preset '{name}' for {} (known: {})", family.name(), known.join(", "))
        })?;
        let mut args: Vec<(String, f64)> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("preset argument '{item}' must look like name=value"))?;
            let (k, v) = (k.trim(), v.trim());
            let slot = args
                .iter_mut()
                .find(|(n, _)| n == k)
                .ok_or_else(|| format!("preset {name} has no parameter '{k}'"))?;
            slot.1 =
                parse_number(v).ok_or_else(|| format!("preset parameter {k} expects a number, got '{v}'"))?;
        }
        Ok(Self { name: name.to_string(), args })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Text(String),
    Preset(Preset),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(s),
            Value::Preset(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Real,
    Positive,
    NonNegative,
    /// Integer `>= 1`.
    Count,
    /// Real `> 1`.
    Exponent,
    /// Vector exponent in `[1, inf]`.
    VectorP,
    Bool,
    Choice(&'static [&'static str]),
    /// `hilbert`, `lp:<p>` or `table:<csv path>`.
    Profile,
    /// `sine:<eps>` or `const:<c>`.
    Forcing,
    Preset(Family),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Default {
    Value(&'static str),
    Required,
    /// Optional, no value unless given.
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Default,
    pub doc: &'static str,
}

const fn key(key: &'static str, kind: Kind, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec { key, kind, default: Default::Value(default), doc }
}

const TOL: KeySpec = key("tol", Kind::Positive, "1e-8", "outer residual tolerance");
const MAX_OUTER: KeySpec = key("max_outer", Kind::Count, "500", "outer iteration budget");

const VOLTERRA_KEYS: &[KeySpec] = &[
    key("T", Kind::Positive, "1", "final time"),
    key("n_steps", Kind::Count, "2000", "grid subintervals"),
    key("dim", Kind::Count, "1", "state dimension"),
    TOL,
    MAX_OUTER,
    key("vector_p", Kind::VectorP, "2", "exponent of the pointwise norm"),
    key("f", Kind::Preset(Family::VolterraF), "affine(c=0.5, w0=1)", "algebraic part"),
    key("g", Kind::Preset(Family::VolterraG), "linear(kappa=0.5)", "integrand"),
    key("alpha", Kind::Preset(Family::Alpha), "const(c=0.5)", "time factor of the growth bound"),
    key("phi", Kind::Preset(Family::Phi), "affine(a=1, b=1)", "state factor of the growth bound"),
];

const HAMMERSTEIN_KEYS: &[KeySpec] = &[
    key("T", Kind::Positive, "1", "final time"),
    key("n_steps", Kind::Count, "1000", "grid subintervals"),
    key("dim", Kind::Count, "1", "state dimension"),
    key("p", Kind::Exponent, "2", "Lebesgue exponent in time"),
    key("vector_p", Kind::VectorP, "2", "exponent of the pointwise norm"),
    TOL,
    MAX_OUTER,
    key("f", Kind::Preset(Family::HammersteinF), "linear(c=-0.5, w0=0)", "algebraic part"),
    key("k", Kind::Preset(Family::Kernel), "exp_decay(rate=1)", "kernel"),
    key("Phi", Kind::Preset(Family::HammersteinPhi), "tanh()", "outer nonlinearity"),
    key("profile", Kind::Profile, "hilbert", "convexity profile for the monotonicity check"),
    key("allow_uncertified", Kind::Bool, "false", "solve even if the ball certificate fails"),
];

const ELLIPTIC_KEYS: &[KeySpec] = &[
    key("n", Kind::Count, "1000", "interior points"),
    key("lambda", Kind::Real, "0", "zero-order coefficient"),
    key("mu", Kind::NonNegative, "0", "coefficient of the p-power term"),
    key("p", Kind::Exponent, "4", "exponent p > 2"),
    key("q", Kind::Exponent, "1.5", "exponent q in [3/2, 2)"),
    key("a", Kind::NonNegative, "0", "coefficient of the q-power term"),
    key("h_preset", Kind::Forcing, "sine:0.001", "forcing"),
    key("auto_mu_star", Kind::Bool, "false", "certify mu < mu* on the ball of radius R"),
    KeySpec { key: "R", kind: Kind::Positive, default: Default::Absent, doc: "ball radius" },
    TOL,
    MAX_OUTER,
];

const GEOMETRY_KEYS: &[KeySpec] = &[
    key("profile", Kind::Profile, "hilbert", "convexity profile"),
    key(
        "op",
        Kind::Choice(&["modulus", "epsilon0", "triang-fuzz", "a5-demo"]),
        "epsilon0",
        "quantity to compute",
    ),
    key("eps", Kind::NonNegative, "1", "argument of the modulus"),
    key("samples", Kind::Count, "10000", "fuzz draws"),
    key("dim", Kind::Count, "5", "vector dimension for fuzzing"),
    key("vectors", Kind::Count, "10", "vectors per fuzz draw"),
];

const CERTIFY_KEYS: &[KeySpec] = &[
    KeySpec {
        key: "kind",
        kind: Kind::Choice(&["mu-star", "power", "c6", "expanding"]),
        default: Default::Required,
        doc: "certificate to compute",
    },
    key("p", Kind::Exponent, "2", "growth exponent"),
    key("q", Kind::Positive, "0.5", "sublinear exponent (mu-star)"),
    key("a", Kind::NonNegative, "1", "growth coefficient"),
    key("b", Kind::NonNegative, "1", "constant term (mu-star)"),
    key("lam_b", Kind::NonNegative, "0.5", "lambda times the Lipschitz constant of B (mu-star)"),
    key("C", Kind::Positive, "0.1", "growth constant (c6)"),
    key("T", Kind::Positive, "1", "final time (c6)"),
    key("r", Kind::NonNegative, "1", "growth exponent (c6)"),
    key("f0", Kind::NonNegative, "0", "norm of f(0) (c6)"),
    key("operator", Kind::Choice(&["neg", "identity", "neg_cube"]), "neg", "B for expanding"),
    key("lambda", Kind::Positive, "0.5", "largest lambda probed (expanding)"),
    key("samples", Kind::Count, "1000", "Monte-Carlo draws (expanding)"),
];

const FUZZ_KEYS: &[KeySpec] = &[
    key("target", Kind::Choice(&["lemma", "resolvent", "tube"]), "lemma", "property to fuzz"),
    key("samples", Kind::Count, "1000", "draws"),
];

/// Validated configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

/// One problem found while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line; `None` for command-line overrides and missing keys.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_number(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "infinity" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn parse_value(spec: &KeySpec, raw: &str) -> Result<Value, String> {
    let k = spec.key;
    let num = || parse_number(raw).ok_or_else(|| format!("{k} expects a number, got '{raw}'"));
    match spec.kind {
        Kind::Real => num().map(Value::Num),
        Kind::Positive => match num()? {
            v if v > 0.0 && v.is_finite() => Ok(Value::Num(v)),
            _ => Err(format!("{k} must be positive")),
        },
        Kind::NonNegative => match num()? {
            v if v >= 0.0 && v.is_finite() => Ok(Value::Num(v)),
            _ => Err(format!("{k} must be nonnegative")),
        },
        Kind::Count => match num()? {
            v if v >= 1.0 && v.fract() == 0.0 && v < 1e12 => Ok(Value::Num(v)),
            _ => Err(format!("{k} must be a positive integer, got '{raw}'")),
        },
        Kind::Exponent => match num()? {
            v if v > 1.0 && v.is_finite() => Ok(Value::Num(v)),
            _ => Err(format!("{k} must exceed 1")),
        },
        Kind::VectorP => match num()? {
            v if v >= 1.0 => Ok(Value::Num(v)),
            _ => Err(format!("{k} must be at least 1")),
        },
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("{k} expects true or false, got '{raw}'")),
        },
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("{k} must be one of {}, got '{raw}'", options.join(", ")))
            }
        }
        Kind::Profile => {
            let ok = raw == "hilbert"
                || raw.strip_prefix("lp:").and_then(parse_number).is_some_and(|p| p > 1.0)
                || raw.strip_prefix("table:").is_some_and(|p| !p.is_empty());
            if ok {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("{k} must be hilbert, lp:<p> with p > 1 or table:<path>, got '{raw}'"))
            }
        }
        Kind::Forcing => {
            let ok =
                ["sine:", "const:"].iter().any(|pre| raw.strip_prefix(pre).and_then(parse_number).is_some());
            if ok {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("{k} must be sine:<eps> or const:<c>, got '{raw}'"))
            }
        }
        Kind::Preset(family) => Preset::parse(raw, family).map(Value::Preset),
    }
}

struct Builder {
    command: Command,
    params: BTreeMap<String, Value>,
    seen: BTreeMap<String, Option<usize>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    errors: Vec<ConfigError>,
}

impl Builder {
    fn new(command: Command) -> Self {
        Self {
            command,
            params: BTreeMap::new(),
            seen: BTreeMap::new(),
            seed: None,
            out: None,
            errors: Vec::new(),
        }
    }

    fn error(&mut self, line: Option<usize>, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    /// File entries may not repeat; overrides (`line = None`) replace.
    fn assign(&mut self, key: &str, raw: &str, line: Option<usize>) {
        if line.is_some() {
            if let Some(prev) = self.seen.get(key) {
                let at = prev.map(|l| format!(" (first set on line {l})")).unwrap_or_default();
                self.error(line, format!("duplicate key '{key}'{at}"));
                return;
            }
        }
        self.seen.insert(key.to_string(), line);
        match key {
            "seed" => match raw.parse::<u64>() {
                Ok(s) => self.seed = Some(s),
                Err(_) => self.error(line, format!("seed must be a nonnegative integer, got '{raw}'")),
            },
            "out" => {
                if raw.is_empty() {
                    self.error(line, "out must be a nonempty path".into());
                } else {
                    self.out = Some(PathBuf::from(raw));
                }
            }
            _ => {
                let Some(spec) = self.command.schema().iter().find(|s| s.key == key) else {
                    self.error(line, format!("unknown key '{key}' for {}", self.command));
                    return;
                };
                match parse_value(spec, raw) {
                    Ok(v) => {
                        self.params.insert(key.to_string(), v);
                    }
                    Err(m) => self.error(line, m),
                }
            }
        }
    }

    fn finish(mut self) -> Result<RunConfig, Vec<ConfigError>> {
        for spec in self.command.schema() {
            if self.params.contains_key(spec.key) || self.seen.contains_key(spec.key) {
                continue;
            }
            match spec.default {
                Default::Value(raw) => {
                    let v = parse_value(spec, raw).expect("built-in defaults are valid");
                    self.params.insert(spec.key.to_string(), v);
                }
                Default::Required => self.error(None, format!("missing required key '{}'", spec.key)),
                Default::Absent => {}
            }
        }
        if self.command == Command::Elliptic
            && self.params.get("auto_mu_star") == Some(&Value::Bool(true))
            && !self.params.contains_key("R")
        {
            self.error(None, "auto_mu_star needs a radius R".into());
        }
        if self.command == Command::Elliptic {
            if let (Some(&Value::Num(p)), Some(&Value::Num(q))) = (self.params.get("p"), self.params.get("q"))
            {
                if p <= 2.0 {
                    self.error(None, "p must exceed 2".into());
                }
                if !(1.5..2.0).contains(&q) {
                    self.error(None, "q must lie in [1.5, 2)".into());
                }
            }
        }
        if !self.errors.is_empty() {
            return Err(self.errors);
        }
        Ok(RunConfig {
            command: self.command,
            params: self.params,
            seed: self.seed.unwrap_or(0),
            output_dir: self.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

/// Parses `text` for `command`, collecting every error.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig, Vec<ConfigError>> {
    parse_with_overrides(text, command, &[])
}

/// [`parse_config`] followed by `key = value` overrides (for example from
/// command-line flags), which replace file entries.
pub fn parse_with_overrides(
    text: &str,
    command: Command,
    overrides: &[(String, String)],
) -> Result<RunConfig, Vec<ConfigError>> {
    let mut b = Builder::new(command);
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        match content.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => b.assign(k.trim(), v.trim(), Some(i + 1)),
            _ => b.error(Some(i + 1), format!("expected 'key = value', got '{content}'")),
        }
    }
    for (k, v) in overrides {
        b.assign(k, v.trim(), None);
    }
    b.finish()
}

impl RunConfig {
    /// Configuration with every default filled in.
    pub fn defaults(command: Command) -> Result<Self, Vec<ConfigError>> {
        parse_config("", command)
    }

    /// Text that parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {} configuration\n", self.command);
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("out = {}\n", self.output_dir.display()));
        for spec in self.command.schema() {
            if let Some(v) = self.params.get(spec.key) {
                out.push_str(&format!("{} = {v}\n", spec.key));
            }
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(Value::Num(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> Option<usize> {
        self.num(key).map(|v| v as usize)
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.params.get(key), Some(Value::Bool(true)))
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.params.get(key) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn preset(&self, key: &str) -> Option<&Preset> {
        match self.params.get(key) {
            Some(Value::Preset(p)) => Some(p),
            _ => None,
        }
    }
}
