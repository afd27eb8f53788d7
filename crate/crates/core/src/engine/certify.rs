//! A-priori radius certificates and the expanding-map falsifier.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::certificate::{Certificate, CertificateKind, Verdict};
use crate::error::{Error, Result};
use crate::rng;
use crate::space::{self, GridFunction, SpaceSpec};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`; returns `(argmax, max)`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse log-spaced scan of `f` on `[lo, hi]` followed by golden-section
/// refinement in `ln R` around the best sample.
fn log_scan_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (points - 1) as f64;
    let mut best = (llo, f64::NEG_INFINITY);
    for i in 0..points {
        let x = if i == points - 1 { lhi } else { llo + i as f64 * step };
        let v = f(x.exp());
        if v > best.1 {
            best = (x, v);
        }
    }
    let g = |x: f64| f(x.exp());
    let (a, b) = ((best.0 - step).max(llo), (best.0 + step).min(lhi));
    let (x, v) = golden_max(&g, a, b, 100);
    if v > best.1 {
        (x.exp(), v)
    } else {
        (best.0.exp(), best.1)
    }
}

/// Largest `mu*` with `mu* R^p + a R^q + lam_b R + b <= R` for some `R`,
/// searched over the default bracket `[1e-9, 1e12]`.
pub fn radius_mu_star(p: f64, q: f64, a: f64, b: f64, lam_b: f64) -> Result<Certificate> {
    radius_mu_star_in(p, q, a, b, lam_b, 1e-9, 1e12)
}

/// [`radius_mu_star`] restricted to `R` in `[r_lo, r_hi]`.
pub fn radius_mu_star_in(
    p: f64,
    q: f64,
    a: f64,
    b: f64,
    lam_b: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<Certificate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Range(format!("p must exceed 1, got {p}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Range(format!("q must lie in (0, 1), got {q}")));
    }
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::Range("a and b must be nonnegative".into()));
    }
    if !(0.0..1.0).contains(&lam_b) {
        return Err(Error::Range(format!("lam_b must lie in [0, 1), got {lam_b}")));
    }
    if !(r_lo > 0.0 && r_hi >= r_lo && r_hi.is_finite()) {
        return Err(Error::Range(format!("bad radius bracket [{r_lo}, {r_hi}]")));
    }
    let numerator = move |r: f64| r * (1.0 - lam_b) - a * r.powf(q) - b;
    let mu = move |r: f64| numerator(r) / r.powf(p);
    let (r_best, mu_best) = log_scan_max(&mu, r_lo, r_hi, 4000);
    if mu_best > 0.0 {
        Ok(Certificate::new(CertificateKind::MuStar, Verdict::Pass, Some(r_best), mu_best)
            .with("mu_star", mu_best)
            .with("numerator", numerator(r_best)))
    } else {
        let (r_num, num_best) = log_scan_max(&numerator, r_lo, r_hi, 4000);
        Ok(Certificate::new(CertificateKind::MuStar, Verdict::Fail, None, num_best)
            .with("best_radius", r_num))
    }
}

/// Ball of admissible data under the power bound `|A u| <= a |u|^p`:
/// `r* = (1 / (a p))^{1/(p-1)}` maximizes `r - a r^p`, and `R = r* - a r*^p`.
pub fn radius_power(a: f64, p: f64) -> Result<Certificate> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Range(format!("a must be positive, got {a}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Range(format!("p must exceed 1, got {p}")));
    }
    let r_star = (1.0 / (a * p)).powf(1.0 / (p - 1.0));
    let radius = r_star - a * r_star.powf(p);
    Ok(Certificate::new(CertificateKind::PowerRadius, Verdict::Pass, Some(radius), radius)
        .with("r_star", r_star))
}

/// Solves `C (T^r + 1) = (R - f0) / (R^r + 1)` for `R > f0`.
///
/// Returns the smallest root; a FAIL carries the supremum of the right-hand
/// side as margin.
pub fn radius_c6(c: f64, t_end: f64, r: f64, f0_norm: f64) -> Result<Certificate> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Range(format!("C must be positive, got {c}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Range(format!("T must be positive, got {t_end}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Range(format!("r must be nonnegative, got {r}")));
    }
    if !(f0_norm >= 0.0 && f0_norm.is_finite()) {
        return Err(Error::Range(format!("|f(0)| must be nonnegative, got {f0_norm}")));
    }
    let lhs = c * (t_end.powf(r) + 1.0);
    let rhs = move |big_r: f64| (big_r - f0_norm) / (big_r.powf(r) + 1.0);
    // Scan the offset d = R - f0 over [1e-12, 1e12].
    const POINTS: usize = 4800;
    let (llo, lhi) = ((1e-12_f64).ln(), (1e12_f64).ln());
    let step = (lhi - llo) / (POINTS - 1) as f64;
    let mut prev: Option<f64> = None;
    let mut best = (f0_norm, f64::NEG_INFINITY);
    for i in 0..POINTS {
        let big_r = f0_norm + (llo + i as f64 * step).exp();
        let v = rhs(big_r);
        if v > best.1 {
            best = (big_r, v);
        }
        if v >= lhs {
            let mut lo = prev.unwrap_or(f0_norm);
            let mut hi = big_r;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rhs(mid) >= lhs {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            return Ok(Certificate::new(
                CertificateKind::C6Radius,
                Verdict::Pass,
                Some(root),
                (best.1 - lhs).max(0.0),
            )
            .with("lhs", lhs));
        }
        prev = Some(big_r);
    }
    let g = |x: f64| rhs(f0_norm + x.exp());
    let centre = (best.0 - f0_norm).ln();
    let (_, sup) = golden_max(&g, (centre - step).max(llo), (centre + step).min(lhi), 200);
    Ok(Certificate::new(CertificateKind::C6Radius, Verdict::Fail, None, sup.max(best.1)).with("lhs", lhs))
}

/// Monte-Carlo falsification of `|u| <= |u - lambda B(u)|` for all `u`
/// and every `lambda` in `lambda_grid`.
///
/// Samples are Gaussian grid functions shaped like `template`, rescaled by a
/// log-uniform factor in `[1e-3, 1e3]`. A pass is evidence only.
pub fn check_expanding(
    b: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    template: &GridFunction,
    s: &SpaceSpec,
    samples: usize,
    lambda_grid: &[f64],
    seed: u64,
) -> Result<Certificate> {
    if samples == 0 {
        return Err(Error::Range("samples must be at least 1".into()));
    }
    if lambda_grid.is_empty() || lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Range("lambda grid must be nonempty and positive".into()));
    }
    let mut rng = rng::substream(seed, "engine.expanding");
    let mut min_margin = f64::INFINITY;
    for k in 0..samples {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let values =
            (0..template.values().len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let u = GridFunction::new(*template.grid(), template.dim(), values)?;
        let bu = b(&u)?;
        u.check_compatible(&bu)?;
        let nu = space::norm(&u, s)?;
        for &lambda in lambda_grid {
            let rhs = space::norm(&space::axpy(-lambda, &bu, &u)?, s)?;
            let margin = rhs - nu;
            if margin < -1e-12 {
                let mut cert = Certificate::new(CertificateKind::Expanding, Verdict::Fail, None, margin)
                    .with("sample", k as f64)
                    .with("lambda", lambda)
                    .with("norm_u", nu)
                    .with("norm_u_minus_lambda_bu", rhs);
                cert.evidence_only = true;
                return Ok(cert);
            }
            min_margin = min_margin.min(margin);
        }
    }
    let mut cert = Certificate::new(CertificateKind::Expanding, Verdict::Pass, None, min_margin.max(0.0))
        .with("samples", samples as f64)
        .with("min_observed_margin", min_margin);
    cert.evidence_only = true;
    Ok(cert)
}
