//! Quantitative geometry of uniformly convex spaces.
//!
//! The angle between nonzero vectors is `|x/|x| - y/|y||`, a number in
//! `[0, 2]`. The modulus of convexity `delta(eps)` is one minus the largest
//! midpoint norm of two unit vectors at distance `eps`. Every
//! [`ConvexityProfile`] returns a lower bound for the true modulus, which
//! keeps the strengthened triangle inequality
//! `|sum v_i| <= sum (1 - 2 delta(alpha_i)) |v_i|` valid and makes the
//! monotonicity check in [`check_a5`] conservative.

use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::error::{Error, Result};
use crate::space::{self, vector_norm, GridFunction, SpaceSpec, TimeNorm};

/// Elements of a normed space that the geometric operations can act on.
pub trait NormedElement: Sized {
    fn norm_in(&self, s: &SpaceSpec) -> Result<f64>;

    /// `a * self + b * other`.
    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self>;
}

impl NormedElement for Vec<f64> {
    fn norm_in(&self, s: &SpaceSpec) -> Result<f64> {
        s.validate()?;
        Ok(vector_norm(self, s.vector_p))
    }

    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "vector lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.iter().zip(other).map(|(x, y)| a * x + b * y).collect())
    }
}

impl NormedElement for GridFunction {
    fn norm_in(&self, s: &SpaceSpec) -> Result<f64> {
        space::norm(self, s)
    }

    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        space::axpy(a, self, &other.scale(b))
    }
}

/// Angle between two nonzero vectors, always in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AngleValue(f64);

impl AngleValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn angle<E: NormedElement>(x: &E, y: &E, s: &SpaceSpec) -> Result<AngleValue> {
    let nx = x.norm_in(s)?;
    let ny = y.norm_in(s)?;
    if nx == 0.0 {
        return Err(Error::DegenerateAngle("first argument".into()));
    }
    if ny == 0.0 {
        return Err(Error::DegenerateAngle("second argument".into()));
    }
    let d = x.combine(1.0 / nx, y, -1.0 / ny)?.norm_in(s)?;
    Ok(AngleValue(d.clamp(0.0, 2.0)))
}

/// Which modulus-of-convexity model to use.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexityProfile {
    /// Inner-product space: `1 - sqrt(1 - eps^2 / 4)`.
    Hilbert,
    /// `L^p`, `p >= 2`: Clarkson's bound `1 - (1 - (eps/2)^p)^{1/p}`.
    Lp { p: f64 },
    /// `L^p`, `1 < p < 2`: Hanner's implicit relation, solved numerically.
    LpSmall { p: f64 },
    /// Sampled `(eps, delta)` pairs on `[0, 2]`, linearly interpolated.
    Empirical { table: Vec<(f64, f64)> },
}

impl ConvexityProfile {
    /// Picks Clarkson or Hanner depending on `p`.
    pub fn lp(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Range(format!("L^p profile needs 1 < p < inf, got {p}")));
        }
        Ok(if p >= 2.0 { ConvexityProfile::Lp { p } } else { ConvexityProfile::LpSmall { p } })
    }

    /// Profile matching the time norm of a solve (`LP(p)` only).
    pub fn for_space(s: &SpaceSpec) -> Result<Self> {
        match s.time_norm {
            TimeNorm::Lp(p) => Self::lp(p),
            other => Err(Error::InvalidSpace(format!(
                "{other:?} is not uniformly convex; pass an explicit profile"
            ))),
        }
    }

    pub fn empirical(mut table: Vec<(f64, f64)>) -> Result<Self> {
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (first, last) = match (table.first(), table.last()) {
            (Some(f), Some(l)) if table.len() >= 2 => (*f, *l),
            _ => return Err(Error::Range("delta table needs at least two rows".into())),
        };
        if first != (0.0, 0.0) {
            return Err(Error::Range("delta table must start at (0, 0)".into()));
        }
        if last.0 != 2.0 {
            return Err(Error::Range("delta table must end at eps = 2".into()));
        }
        for w in table.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(Error::Range(format!("duplicate eps {}", w[0].0)));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::Range(format!("delta decreases at eps = {}", w[1].0)));
            }
        }
        if let Some(&(e, d)) = table.iter().find(|(e, d)| !(0.0..=1.0).contains(d) || !e.is_finite()) {
            return Err(Error::Range(format!("delta({e}) = {d} outside [0, 1]")));
        }
        if let Some(&(e, _)) = table.iter().skip(1).find(|(_, d)| *d <= 0.0) {
            return Err(Error::Range(format!("delta({e}) must be positive")));
        }
        Ok(ConvexityProfile::Empirical { table })
    }

    /// Parses an `eps,delta` CSV (header row required).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(|h| h.replace(' ', "")) {
            Some(h) if h == "eps,delta" => {}
            _ => return Err(Error::Parse("delta table header must be `eps,delta`".into())),
        }
        let mut table = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut it = line.split(',').map(|f| f.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(e)), Some(Ok(d)), None) => table.push((e, d)),
                _ => return Err(Error::Parse(format!("row {}: expected `eps,delta`", i + 2))),
            }
        }
        Self::empirical(table)
    }

    pub fn name(&self) -> String {
        match self {
            ConvexityProfile::Hilbert => "hilbert".into(),
            ConvexityProfile::Lp { p } | ConvexityProfile::LpSmall { p } => format!("lp:{p}"),
            ConvexityProfile::Empirical { .. } => "table".into(),
        }
    }
}

/// Lower bound for the modulus of convexity at `eps`.
pub fn modulus(profile: &ConvexityProfile, eps: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(Error::Range(format!("eps must lie in [0, 2], got {eps}")));
    }
    Ok(match profile {
        ConvexityProfile::Hilbert => 1.0 - (1.0 - eps * eps / 4.0).max(0.0).sqrt(),
        ConvexityProfile::Lp { p } => 1.0 - (1.0 - (eps / 2.0).powf(*p)).max(0.0).powf(1.0 / p),
        ConvexityProfile::LpSmall { p } => hanner_modulus(*p, eps),
        ConvexityProfile::Empirical { table } => interpolate(table, eps),
    })
}

fn interpolate(table: &[(f64, f64)], eps: f64) -> f64 {
    let k = table.partition_point(|(e, _)| *e <= eps);
    if k == 0 {
        return table[0].1;
    }
    if k == table.len() {
        return table[k - 1].1;
    }
    let (e0, d0) = table[k - 1];
    let (e1, d1) = table[k];
    d0 + (d1 - d0) * (eps - e0) / (e1 - e0)
}

/// Solves `(m + eps/2)^p + |m - eps/2|^p = 2` for the midpoint norm `m`,
/// returning `1 - m`. The left side is nondecreasing in `m` on `[0, 1]`.
fn hanner_modulus(p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return 0.0;
    }
    if eps == 2.0 {
        return 1.0;
    }
    let e = eps / 2.0;
    let f = |m: f64| (m + e).powf(p) + (m - e).abs().powf(p) - 2.0;
    let df = |m: f64| p * (m + e).powf(p - 1.0) + p * (m - e).signum() * (m - e).abs().powf(p - 1.0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut m = (1.0 - e * e).max(0.0).sqrt();
    for _ in 0..200 {
        let fm = f(m);
        if fm == 0.0 {
            break;
        }
        if fm > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
        let d = df(m);
        let newton = m - fm / d;
        let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - m).abs() <= 1e-16 || hi - lo <= 1e-16 {
            m = next;
            break;
        }
        m = next;
    }
    (1.0 - m).clamp(0.0, 1.0)
}

/// Minimum of `delta(e1) + delta(e0 - e1)` over admissible splits
/// `0 <= e1, e0 - e1 <= 2`; returns `(min, argmin e1)`.
fn min_split(profile: &ConvexityProfile, e0: f64) -> Result<(f64, f64)> {
    const GRID: usize = 10_000;
    let lo = (e0 - 2.0).max(0.0);
    let hi = e0.min(2.0);
    let sum = |e1: f64| -> Result<f64> {
        let e1 = e1.clamp(lo, hi);
        let e2 = (e0 - e1).clamp(0.0, 2.0);
        Ok(modulus(profile, e1)? + modulus(profile, e2)?)
    };
    if hi <= lo {
        return Ok((sum(lo)?, lo));
    }
    let step = (hi - lo) / GRID as f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=GRID {
        let e1 = if i == GRID { hi } else { lo + i as f64 * step };
        let v = sum(e1)?;
        if v < best.0 {
            best = (v, e1);
        }
    }
    // Golden-section refinement around the best grid point.
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sum(c)?, sum(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sum(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sum(d)?;
        }
    }
    for (v, e) in [(fc, c), (fd, d)] {
        if v < best.0 {
            best = (v, e);
        }
    }
    Ok(best)
}

/// Smallest `eps0` such that every split `eps0 = e1 + e2` with
/// `0 <= e1, e2 <= 2` has `delta(e1) + delta(e2) >= 1/2`.
pub fn epsilon0(profile: &ConvexityProfile) -> Result<f64> {
    let (at_four, _) = min_split(profile, 4.0)?;
    if at_four < 0.5 {
        return Err(Error::NoEpsilon0(format!(
            "2 * delta(2) = {at_four} < 1/2 for profile {}",
            profile.name()
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 4.0_f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if min_split(profile, mid)?.0 >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest split sum at `eps0`, for diagnostics and tests.
pub fn split_sum_min(profile: &ConvexityProfile, e0: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&e0) {
        return Err(Error::Range(format!("eps0 must lie in [0, 4], got {e0}")));
    }
    Ok(min_split(profile, e0)?.0)
}

/// Both sides of the strengthened triangle inequality:
/// returns `(bound, lhs)` with `lhs = |sum v_i|` and
/// `bound = sum (1 - 2 delta(alpha(v_i, V))) |v_i|`.
pub fn strong_triangle_bound<E: NormedElement + Clone>(
    vs: &[E],
    s: &SpaceSpec,
    profile: &ConvexityProfile,
) -> Result<(f64, f64)> {
    let mut total = vs.first().cloned().ok_or_else(|| Error::Range("need at least one vector".into()))?;
    for v in &vs[1..] {
        total = total.combine(1.0, v, 1.0)?;
    }
    let lhs = total.norm_in(s)?;
    if lhs == 0.0 {
        return Err(Error::DegenerateAngle("sum of the vectors is zero".into()));
    }
    let mut bound = 0.0;
    for (i, v) in vs.iter().enumerate() {
        let nv = v.norm_in(s)?;
        if nv == 0.0 {
            return Err(Error::DegenerateAngle(format!("vector {i} is zero")));
        }
        let a = angle(v, &total, s)?.value();
        bound += (1.0 - 2.0 * modulus(profile, a)?) * nv;
    }
    Ok((bound, lhs))
}

/// Largest pairwise angle in a finite sample, a lower bound for the opening
/// of the cone it generates.
pub fn cone_opening<E: NormedElement>(xs: &[E], s: &SpaceSpec) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Range("cone sample is empty".into()));
    }
    for (i, x) in xs.iter().enumerate() {
        if x.norm_in(s)? == 0.0 {
            return Err(Error::DegenerateAngle(format!("vector {i} is zero")));
        }
    }
    let mut best = 0.0_f64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            best = best.max(angle(&xs[i], &xs[j], s)?.value());
        }
    }
    Ok(best)
}

/// Monotonicity condition: `alpha(Au, Au+Bu) + alpha(Bu, Au+Bu) >= eps0`.
///
/// Zero `Au`, `Bu` or `Au + Bu` gives `PassVacuous`.
pub fn check_a5<E: NormedElement>(
    au: &E,
    bu: &E,
    s: &SpaceSpec,
    profile: &ConvexityProfile,
) -> Result<Certificate> {
    check_a5_with_epsilon0(au, bu, s, epsilon0(profile)?)
}

/// [`check_a5`] with a precomputed `eps0`.
pub fn check_a5_with_epsilon0<E: NormedElement>(
    au: &E,
    bu: &E,
    s: &SpaceSpec,
    eps0: f64,
) -> Result<Certificate> {
    let sum = au.combine(1.0, bu, 1.0)?;
    let (na, nb, ns) = (au.norm_in(s)?, bu.norm_in(s)?, sum.norm_in(s)?);
    if na == 0.0 || nb == 0.0 || ns == 0.0 {
        return Ok(
            Certificate::new(CertificateKind::A5, Verdict::PassVacuous, None, 0.0).with("epsilon0", eps0)
        );
    }
    let alpha_a = angle(au, &sum, s)?.value();
    let alpha_b = angle(bu, &sum, s)?.value();
    let margin = alpha_a + alpha_b - eps0;
    let verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
    Ok(Certificate::new(CertificateKind::A5, verdict, None, margin)
        .with("alpha_a", alpha_a)
        .with("alpha_b", alpha_b)
        .with("epsilon0", eps0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2() -> SpaceSpec {
        SpaceSpec::sup(2.0)
    }

    #[test]
    fn angle_examples() {
        let x = vec![1.0, 2.0, -0.5];
        let minus_x: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!(angle(&x, &x, &l2()).unwrap().value().abs() < 1e-15);
        assert!((angle(&x, &minus_x, &l2()).unwrap().value() - 2.0).abs() < 1e-15);
        let a = angle(&vec![1.0, 0.0], &vec![0.0, 1.0], &l2()).unwrap().value();
        assert!((a - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!(matches!(angle(&vec![0.0, 0.0], &x[..2].to_vec(), &l2()), Err(Error::DegenerateAngle(_))));
    }

    #[test]
    fn hilbert_modulus_values() {
        let h = ConvexityProfile::Hilbert;
        assert_eq!(modulus(&h, 0.0).unwrap(), 0.0);
        assert_eq!(modulus(&h, 2.0).unwrap(), 1.0);
        assert!((modulus(&h, 1.0).unwrap() - (1.0 - 3.0_f64.sqrt() / 2.0)).abs() < 1e-9);
        assert!(matches!(modulus(&h, 2.5), Err(Error::Range(_))));
        assert!(matches!(modulus(&h, -0.1), Err(Error::Range(_))));
    }

    #[test]
    fn hilbert_modulus_matches_grid_search_on_circle() {
        // Unit x, y in R^2 with |x - y| = 1: maximize |(x + y)/2| by scanning.
        let mut best = 0.0_f64;
        for i in 0..200_000 {
            let th = i as f64 / 200_000.0 * std::f64::consts::TAU;
            let x = [1.0, 0.0];
            let y = [th.cos(), th.sin()];
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            if (d - 1.0).abs() < 1e-4 {
                best = best.max((((x[0] + y[0]) / 2.0).powi(2) + ((x[1] + y[1]) / 2.0).powi(2)).sqrt());
            }
        }
        let delta = modulus(&ConvexityProfile::Hilbert, 1.0).unwrap();
        assert!((1.0 - best - delta).abs() < 1e-4);
    }

    #[test]
    fn hanner_reduces_to_hilbert_at_p2_and_brackets_clarkson() {
        for i in 0..=20 {
            let e = i as f64 * 0.1;
            let h = modulus(&ConvexityProfile::Hilbert, e).unwrap();
            let s = hanner_modulus(2.0, e);
            assert!((h - s).abs() < 1e-12, "eps {e}: {h} vs {s}");
        }
        // Smaller p means a less convex space.
        let p15 = ConvexityProfile::lp(1.5).unwrap();
        assert!(matches!(p15, ConvexityProfile::LpSmall { .. }));
        for e in [0.3, 1.0, 1.7] {
            assert!(modulus(&p15, e).unwrap() < modulus(&ConvexityProfile::Hilbert, e).unwrap());
        }
    }

    #[test]
    fn hanner_root_satisfies_relation() {
        for p in [1.2, 1.5, 1.9] {
            for e in [0.1, 0.8, 1.5, 1.99] {
                let d = hanner_modulus(p, e);
                let m = 1.0 - d;
                let lhs = (m + e / 2.0).powf(p) + (m - e / 2.0).abs().powf(p);
                assert!((lhs - 2.0).abs() < 1e-12, "p={p} e={e} lhs={lhs}");
            }
        }
    }

    #[test]
    fn empirical_table_validation_and_interpolation() {
        let t = ConvexityProfile::empirical(vec![(0.0, 0.0), (2.0, 0.5)]).unwrap();
        assert!((modulus(&t, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(ConvexityProfile::empirical(vec![(0.0, 0.0)]).is_err());
        assert!(ConvexityProfile::empirical(vec![(0.0, 0.1), (2.0, 0.5)]).is_err());
        assert!(ConvexityProfile::empirical(vec![(0.0, 0.0), (1.0, 0.6), (2.0, 0.5)]).is_err());
        assert!(ConvexityProfile::empirical(vec![(0.0, 0.0), (1.0, 0.6)]).is_err());
        assert!(ConvexityProfile::empirical(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.5)]).is_err());
        let csv = "eps,delta\n0,0\n1,0.2\n2,0.6\n";
        let parsed = ConvexityProfile::from_csv(csv).unwrap();
        assert!((modulus(&parsed, 1.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(ConvexityProfile::from_csv("e,d\n0,0\n").is_err());
    }

    #[test]
    fn epsilon0_examples() {
        let h = epsilon0(&ConvexityProfile::Hilbert).unwrap();
        assert!((h - 7.0_f64.sqrt()).abs() < 1e-6);
        let lin = ConvexityProfile::empirical(vec![(0.0, 0.0), (2.0, 0.5)]).unwrap();
        assert!((epsilon0(&lin).unwrap() - 2.0).abs() < 1e-6);
        let p2 = epsilon0(&ConvexityProfile::lp(2.0).unwrap()).unwrap();
        assert!((p2 - h).abs() < 1e-6);
    }

    #[test]
    fn epsilon0_exhaustive_grid_oracle_for_hilbert() {
        // Independent oracle: scan eps0 on a grid, splits on a grid.
        let delta = |e: f64| 1.0 - (1.0 - e * e / 4.0).sqrt();
        let mut first_ok = None;
        for i in 0..=4000 {
            let e0 = i as f64 * 1e-3;
            let lo = (e0 - 2.0).max(0.0);
            let hi = e0.min(2.0);
            let ok = (0..=400).all(|j| {
                let e1 = lo + (hi - lo) * j as f64 / 400.0;
                delta(e1) + delta(e0 - e1) >= 0.5
            });
            if ok {
                first_ok = Some(e0);
                break;
            }
        }
        let oracle = first_ok.unwrap();
        let got = epsilon0(&ConvexityProfile::Hilbert).unwrap();
        assert!((oracle - got).abs() <= 1.1e-3, "oracle {oracle} vs {got}");
    }

    #[test]
    fn weak_table_has_no_epsilon0() {
        let weak = ConvexityProfile::empirical(vec![(0.0, 0.0), (2.0, 0.2)]).unwrap();
        assert!(matches!(epsilon0(&weak), Err(Error::NoEpsilon0(_))));
    }

    #[test]
    fn strong_triangle_examples() {
        let v = vec![3.0, -4.0];
        let (b, l) =
            strong_triangle_bound(std::slice::from_ref(&v), &l2(), &ConvexityProfile::Hilbert).unwrap();
        assert!((b - 5.0).abs() < 1e-12 && (l - 5.0).abs() < 1e-12);
        let (b, l) =
            strong_triangle_bound(&[v.clone(), v.clone()], &l2(), &ConvexityProfile::Hilbert).unwrap();
        assert!((b - 10.0).abs() < 1e-12 && (l - 10.0).abs() < 1e-12);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!(matches!(
            strong_triangle_bound(&[v.clone(), neg], &l2(), &ConvexityProfile::Hilbert),
            Err(Error::DegenerateAngle(_))
        ));
        assert!(matches!(
            strong_triangle_bound(&[v, vec![0.0, 0.0]], &l2(), &ConvexityProfile::Hilbert),
            Err(Error::DegenerateAngle(_))
        ));
    }

    #[test]
    fn cone_opening_examples() {
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let s = vec![1.0, 1.0];
        assert_eq!(cone_opening(std::slice::from_ref(&e1), &l2()).unwrap(), 0.0);
        assert!((cone_opening(&[e1.clone(), vec![-1.0, 0.0]], &l2()).unwrap() - 2.0).abs() < 1e-15);
        let o = cone_opening(&[e1.clone(), e2, s], &l2()).unwrap();
        assert!((o - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!(cone_opening::<Vec<f64>>(&[], &l2()).is_err());
        assert!(matches!(cone_opening(&[e1, vec![0.0, 0.0]], &l2()), Err(Error::DegenerateAngle(_))));
    }

    #[test]
    fn check_a5_examples() {
        let h = ConvexityProfile::Hilbert;
        let e1 = vec![1.0, 0.0];
        let c = check_a5(&e1, &vec![0.0, 0.0], &l2(), &h).unwrap();
        assert_eq!(c.verdict, Verdict::PassVacuous);
        let c = check_a5(&e1, &vec![-1.0, 0.0], &l2(), &h).unwrap();
        assert_eq!(c.verdict, Verdict::PassVacuous);
        let c = check_a5(&e1, &vec![0.0, -1.0], &l2(), &h).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        let a = (2.0 - 2.0_f64.sqrt()).sqrt();
        assert!((c.witness_value("alpha_a").unwrap() - a).abs() < 1e-12);
        assert!((c.margin - (2.0 * a - 7.0_f64.sqrt())).abs() < 1e-6);
        assert!((c.margin + 1.115).abs() < 1e-3);
    }

    #[test]
    fn grid_function_angles_use_the_time_norm() {
        let g = crate::space::Grid::new(1.0, 50).unwrap();
        let u = GridFunction::from_scalar_fn(g, |t| t).unwrap();
        let v = u.scale(3.5);
        let s = SpaceSpec::lp(2.0, 2.0);
        assert!(angle(&u, &v, &s).unwrap().value() < 1e-14);
        assert!((angle(&u, &u.scale(-1.0), &s).unwrap().value() - 2.0).abs() < 1e-14);
        assert!(ConvexityProfile::for_space(&SpaceSpec::sup(2.0)).is_err());
        assert_eq!(ConvexityProfile::for_space(&s).unwrap(), ConvexityProfile::Lp { p: 2.0 });
    }
}
