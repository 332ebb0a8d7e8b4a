//! Adaptive Simpson quadrature used by the builtin potentials.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 52)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrates `exp(g(x))` over `[a, b]` in a numerically stable way.
///
/// Returns `log` of the integral. The maximum of `g` over a coarse scan is
/// subtracted before exponentiating so that large negative potentials do not
/// underflow; the interval is pre-split into segments so a narrow peak
/// between the initial Simpson nodes cannot be missed.
pub fn log_integral_exp(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let scan = 256;
    let mut gmax = f64::NEG_INFINITY;
    for i in 0..=scan {
        let x = a + (b - a) * (i as f64) / (scan as f64);
        let v = g(x);
        if v > gmax {
            gmax = v;
        }
    }
    if gmax == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let shifted = |x: f64| {
        let v = (g(x) - gmax).exp();
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    let segments = 64;
    let mut integral = 0.0;
    for i in 0..segments {
        let lo = a + (b - a) * i as f64 / segments as f64;
        let hi = a + (b - a) * (i + 1) as f64 / segments as f64;
        integral += adaptive_simpson(&shifted, lo, hi, tol / segments as f64);
    }
    gmax + integral.max(0.0).ln()
}
