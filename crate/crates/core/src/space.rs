//! Discretized function spaces on a uniform time grid.
//!
//! A [`GridFunction`] samples a curve `[0, T] -> R^d` at the nodes of a
//! [`Grid`]. Norms are selected with a [`SpaceSpec`]: the pointwise norm on
//! `R^d` is an `l^p` norm, and the time norm is either the supremum over
//! nodes, a trapezoid-rule `L^p` norm, or the discrete `W^{1,inf}` norm
//! (values plus forward difference quotients).

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Uniform grid `t_i = i * t_end / n_steps`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t_end: f64,
    n_steps: usize,
}

impl Grid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidGrid(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing.
    pub fn h(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Composite trapezoid weights for the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.len()];
        w[0] = 0.5 * h;
        w[self.n_steps] = 0.5 * h;
        w
    }
}

/// Norm used in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeNorm {
    /// `max_i |u(t_i)|`.
    Sup,
    /// Trapezoid approximation of `(int_0^T |u(t)|^p dt)^{1/p}`.
    Lp(f64),
    /// `max_i |u(t_i)| + max_i |(u(t_{i+1}) - u(t_i)) / h|`.
    W1Inf,
}

/// Norm descriptor: time norm plus the exponent of the pointwise norm on `R^d`.
///
/// `vector_p = f64::INFINITY` selects the max-coordinate norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSpec {
    pub time_norm: TimeNorm,
    pub vector_p: f64,
}

impl SpaceSpec {
    pub fn sup(vector_p: f64) -> Self {
        Self { time_norm: TimeNorm::Sup, vector_p }
    }

    pub fn lp(p: f64, vector_p: f64) -> Self {
        Self { time_norm: TimeNorm::Lp(p), vector_p }
    }

    pub fn w1inf(vector_p: f64) -> Self {
        Self { time_norm: TimeNorm::W1Inf, vector_p }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vector_p >= 1.0) {
            return Err(Error::InvalidSpace(format!("vector_p must lie in [1, inf], got {}", self.vector_p)));
        }
        if let TimeNorm::Lp(p) = self.time_norm {
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::InvalidSpace(format!("LP exponent must lie in (1, inf), got {p}")));
            }
        }
        Ok(())
    }

    fn validate_for(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        if self.time_norm == TimeNorm::W1Inf && grid.n_steps() < 2 {
            return Err(Error::InvalidSpace("W1INF needs a grid with n_steps >= 2".into()));
        }
        Ok(())
    }
}

/// `l^p` norm of a vector; `p = inf` gives the max norm.
pub fn vector_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        // Scale by the max entry so large exponents do not overflow.
        let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// A function on a [`Grid`] with values in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps a row-major `(n_steps + 1) x dim` buffer.
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("dim must be positive".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values ({} nodes x dim {}), got {}",
                grid.len() * dim,
                grid.len(),
                dim,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: k / dim, component: k % dim });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self { grid, dim, values: vec![0.0; grid.len() * dim] }
    }

    /// Same value `c` at every node.
    pub fn constant(grid: Grid, c: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.len() * c.len());
        for _ in 0..grid.len() {
            values.extend_from_slice(c);
        }
        Self { grid, dim: c.len(), values }
    }

    /// Samples `f(t_i)`; `f` must return `dim` components.
    pub fn from_fn<F>(grid: Grid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for (i, t) in grid.nodes().enumerate() {
            let row = f(t);
            if row.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "node {i}: expected {dim} components, got {}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::new(grid, dim, values)
    }

    pub fn from_scalar_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::new(grid, 1, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Builds a new function from `f(t_i, u(t_i))`.
    pub fn map_rows<F>(&self, out_dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64, &[f64]) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(self.grid.len() * out_dim);
        for (i, row) in self.rows().enumerate() {
            let out = f(self.grid.node(i), row);
            if out.len() != out_dim {
                return Err(Error::ShapeMismatch(format!(
                    "node {i}: expected {out_dim} components, got {}",
                    out.len()
                )));
            }
            values.extend(out);
        }
        Self::new(self.grid, out_dim, values)
    }

    /// Pointwise `l^p` norms `|u(t_i)|`.
    pub fn pointwise_norms(&self, vector_p: f64) -> Vec<f64> {
        self.rows().map(|r| vector_norm(r, vector_p)).collect()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { grid: self.grid, dim: self.dim, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(format!(
                "grids differ: (T={}, n={}) vs (T={}, n={})",
                self.grid.t_end, self.grid.n_steps, other.grid.t_end, other.grid.n_steps
            )));
        }
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!("dimensions differ: {} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }

    /// Writes `t,x1,...,xd` CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for k in 1..=self.dim {
            let _ = write!(out, ",x{k}");
        }
        out.push('\n');
        for (i, row) in self.rows().enumerate() {
            let _ = write!(out, "{:.16e}", self.grid.node(i));
            for v in row {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV produced by [`GridFunction::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let dim = cols.len() - 1;
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (ln, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Parse(format!(
                    "row {}: expected {} fields, got {}",
                    ln + 2,
                    dim + 1,
                    fields.len()
                )));
            }
            for (j, f) in fields.iter().enumerate() {
                let v: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad number `{f}`", ln + 2)))?;
                if j == 0 {
                    ts.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        if ts.len() < 2 {
            return Err(Error::Parse("need at least two rows".into()));
        }
        let grid = Grid::new(*ts.last().unwrap(), ts.len() - 1)?;
        for (i, t) in ts.iter().enumerate() {
            if (t - grid.node(i)).abs() > 1e-9 * grid.t_end().max(1.0) {
                return Err(Error::Parse(format!("row {}: grid is not uniform from 0", i + 2)));
            }
        }
        Self::new(grid, dim, values)
    }
}

/// Discrete norm of `u` in the space `s`.
pub fn norm(u: &GridFunction, s: &SpaceSpec) -> Result<f64> {
    s.validate_for(u.grid())?;
    let pw = u.pointwise_norms(s.vector_p);
    Ok(match s.time_norm {
        TimeNorm::Sup => pw.iter().fold(0.0_f64, |m, v| m.max(*v)),
        TimeNorm::Lp(p) => {
            let m = pw.iter().fold(0.0_f64, |m, v| m.max(*v));
            if m == 0.0 {
                return Ok(0.0);
            }
            let w = u.grid().trapezoid_weights();
            let s: f64 = pw.iter().zip(&w).map(|(v, w)| w * (v / m).powf(p)).sum();
            m * s.powf(1.0 / p)
        }
        TimeNorm::W1Inf => {
            let h = u.grid().h();
            let sup = pw.iter().fold(0.0_f64, |m, v| m.max(*v));
            let mut lip = 0.0_f64;
            let mut diff = vec![0.0; u.dim()];
            for i in 0..u.grid().n_steps() {
                for (k, d) in diff.iter_mut().enumerate() {
                    *d = (u.row(i + 1)[k] - u.row(i)[k]) / h;
                }
                lip = lip.max(vector_norm(&diff, s.vector_p));
            }
            sup + lip
        }
    })
}

/// `a * u + v` nodewise.
pub fn axpy(a: f64, u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    u.check_compatible(v)?;
    let values = u.values.iter().zip(&v.values).map(|(x, y)| a * x + y).collect();
    GridFunction::new(u.grid, u.dim, values)
}

/// `u - v` nodewise.
pub fn sub(u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    axpy(-1.0, v, u)
}

/// `u + v` nodewise.
pub fn add(u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    axpy(1.0, u, v)
}

/// Running composite-trapezoid integral `t_i -> int_0^{t_i} w`.
pub fn cumulative_integral(w: &GridFunction) -> GridFunction {
    let d = w.dim;
    let half_h = 0.5 * w.grid.h();
    let mut values = vec![0.0; w.values.len()];
    for i in 1..w.grid.len() {
        for k in 0..d {
            values[i * d + k] =
                values[(i - 1) * d + k] + half_h * (w.values[(i - 1) * d + k] + w.values[i * d + k]);
        }
    }
    GridFunction { grid: w.grid, dim: d, values }
}

/// Composite trapezoid integral of nodal samples over the whole grid.
pub fn trapezoid(grid: &Grid, samples: &[f64]) -> f64 {
    grid.trapezoid_weights().iter().zip(samples).map(|(w, v)| w * v).sum()
}
