//! Adaptive quadrature on a single interval.

/// Adaptive trapezoid rule with one Richardson step per accepted panel.
///
/// A panel is accepted when halving it changes the trapezoid value by at
/// most `3 * max(abs_tol, 1e-13 * |value|)`.
pub fn adaptive_trapezoid<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let whole = 0.5 * (b - a) * (fa + fb);
    panel(f, a, b, fa, fb, whole, abs_tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn panel<F>(f: &F, a: f64, b: f64, fa: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let m = 0.5 * (a + b);
    let fm = f(m);
    let left = 0.25 * (b - a) * (fa + fm);
    let right = 0.25 * (b - a) * (fm + fb);
    let refined = left + right;
    let diff = refined - whole;
    if depth >= 48 || diff.abs() <= 3.0 * tol.max(1e-13 * refined.abs()) {
        return refined + diff / 3.0;
    }
    panel(f, a, m, fa, fm, left, 0.5 * tol, depth + 1) + panel(f, m, b, fm, fb, right, 0.5 * tol, depth + 1)
}
