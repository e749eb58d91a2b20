//! Numerical Laplace inversion (fixed Talbot and Euler summation) of the
//! transforms defining W^{(q)} and its relatives. Independent of the
//! partial-fraction roots, so it serves as the oracle for the closed form and
//! as the fallback when ψ(θ) = q has a repeated root.

use num_complex::Complex64;

use crate::levy::LevyModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Talbot,
    Euler,
}

/// Which function of the scale family to invert.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    W,
    WPrime,
    WBar,
    WBar2,
}

const TALBOT_TERMS: usize = 20;
const EULER_TERMS: usize = 18;

/// Fixed Talbot contour inversion of `f` at `t > 0`.
pub fn talbot<F: Fn(Complex64) -> Complex64>(f: F, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut sum = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let th = k as f64 * std::f64::consts::PI / m as f64;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sig = th + (th * cot - 1.0) * cot;
        sum += ((s * t).exp() * f(s) * Complex64::new(1.0, sig)).re;
    }
    r / m as f64 * sum
}

/// Euler-summation inversion of `f` at `t > 0`.
pub fn euler<F: Fn(Complex64) -> Complex64>(f: F, t: f64, m: usize) -> f64 {
    let mf = m as f64;
    let shift = mf * std::f64::consts::LN_10 / 3.0;
    let mut xi = vec![1.0; 2 * m + 1];
    xi[0] = 0.5;
    let tail = 0.5f64.powi(m as i32);
    xi[2 * m] = tail;
    let mut binom = 1.0;
    for j in 1..m {
        binom *= (m - j + 1) as f64 / j as f64;
        xi[2 * m - j] = xi[2 * m - j + 1] + tail * binom;
    }
    let mut sum = 0.0;
    for (k, &x) in xi.iter().enumerate() {
        let beta = Complex64::new(shift, std::f64::consts::PI * k as f64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * x * f(beta / t).re;
    }
    10f64.powf(mf / 3.0) / t * sum
}

/// Invert one member of the scale family at `x > 0`. The transform is shifted
/// by Φ(q), which moves every singularity into the closed left half-plane.
pub fn invert(model: &LevyModel, q: f64, target: Target, x: f64, method: Method) -> f64 {
    let shift = model.phi(q).unwrap_or(0.0);
    let w0 = model.w_at_zero();
    let transform = |s: Complex64| {
        let s = s + shift;
        let base = 1.0 / (model.psi_complex(s) - q);
        match target {
            Target::W => base,
            Target::WPrime => s * base - w0,
            Target::WBar => base / s,
            Target::WBar2 => base / (s * s),
        }
    };
    let v = match method {
        Method::Talbot => talbot(transform, x, TALBOT_TERMS),
        Method::Euler => euler(transform, x, EULER_TERMS),
    };
    (shift * x).exp() * v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_elementary_transforms() {
        // 1/(s+1) <-> e^{-t}; 1/s^2 <-> t
        for &t in &[0.1, 1.0, 5.0] {
            let a = talbot(|s| 1.0 / (s + 1.0), t, 20);
            let b = euler(|s| 1.0 / (s + 1.0), t, 18);
            assert!((a - (-t).exp()).abs() < 1e-9 * (-t).exp(), "talbot {t}");
            assert!((b - (-t).exp()).abs() < 1e-8 * (-t).exp(), "euler {t}");
            let c = talbot(|s| 1.0 / (s * s), t, 20);
            assert!((c - t).abs() < 1e-10 * t);
        }
    }

    #[test]
    fn brownian_scale_function_by_inversion() {
        // ψ(θ) = θ²: W^{(1)}(x) = sinh(x)
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        for &x in &[0.2, 1.0, 4.0] {
            let v = invert(&m, 1.0, Target::W, x, Method::Talbot);
            assert!((v - x.sinh()).abs() < 1e-9 * x.sinh());
        }
    }
}
