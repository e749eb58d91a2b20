//! Small numerical building blocks shared by the scale-function, kernel and
//! inversion code: stable exponential divided differences, a safeguarded
//! bracketed root finder and composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// `(e^t - 1) / t`, continuous at 0.
pub fn phi1(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 + 0.5 * t
    } else {
        t.exp_m1() / t
    }
}

/// `(e^t - 1 - t) / t^2`, continuous at 0.
pub fn phi2(t: f64) -> f64 {
    if t.abs() < 0.5 {
        // sum_k t^k / (k+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 1..20 {
            term *= t / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (t.exp_m1() - t) / (t * t)
    }
}

/// Root of `f` on `(lo, hi)` where `f` changes sign. `f` returns the value and
/// derivative; `lo_positive` gives the sign of `f` just right of `lo`, so the
/// endpoints themselves are never evaluated (they may be poles).
pub fn bracketed_root<F>(f: F, mut lo: f64, mut hi: f64, lo_positive: bool) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return 0.5 * (lo + hi);
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

const GL_ORDER: usize = 10;

/// Nodes and weights of the `GL_ORDER`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GL_ORDER))
}

/// n-point Gauss–Legendre nodes by Newton iteration on P_n.
pub fn gauss_legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Maximum panel width of the composite rule.
pub const PANEL_WIDTH: f64 = 0.5;

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let rule = gauss_legendre();
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for &(node, weight) in rule {
            s += weight * f(mid + 0.5 * width * node);
        }
        total += 0.5 * width * s;
    }
    total
}

/// Like [`integrate`], with `Result`-returning integrands.
pub fn try_integrate<F, E>(mut f: F, a: f64, b: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut err = None;
    let v = integrate(
        |y| match f(y) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_match_direct_formulas() {
        for &t in &[-3.0, -0.7, -0.49, -1e-3, 1e-3, 0.3, 0.51, 2.0] {
            let f1: f64 = (f64::exp(t) - 1.0) / t;
            let f2: f64 = (f64::exp(t) - 1.0 - t) / (t * t);
            assert!((phi1(t) - f1).abs() < 1e-12 * f1.abs().max(1.0), "phi1({t})");
            assert!((phi2(t) - f2).abs() < 1e-9 * f2.abs(), "phi2({t})");
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two_and_integrate_polynomials() {
        let rule = gauss_legendre();
        let total: f64 = rule.iter().map(|r| r.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        // exact up to degree 19
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_integrates_exponentials() {
        let v = integrate(|x| (1.3 * x).exp(), 0.0, 7.0);
        let exact = ((1.3f64 * 7.0).exp() - 1.0) / 1.3;
        assert!((v - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn root_finder_handles_poles_at_the_ends() {
        // 1/(x+1) - 2 has a pole at -1 and its root at -0.5
        let f = |x: f64| (1.0 / (x + 1.0) - 2.0, -1.0 / ((x + 1.0) * (x + 1.0)));
        let r = bracketed_root(f, -1.0, 0.0, true);
        assert!((r + 0.5).abs() < 1e-15);
    }
}
