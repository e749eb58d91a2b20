//! The convolution operator M_a^{(q,r)} and the kernels built from it.
//!
//! M_a f(x) = f(x − a) + r ∫_0^x W^{(q+r)}(x − y) f(y − a) dy, which reduces to
//! f(x − a) for x < 0. Kernels are evaluated pointwise on demand with
//! composite Gauss–Legendre quadrature; the integrand is smooth on (0, x)
//! because W^{(q+r)} is smooth on (0, ∞) and f is evaluated at arguments ≥ −a > 0.
//!
//! With W̄_{q+r} = W̄^{(q+r)} and Z = Z^{(q)}:
//! - I(x) = M_a W^{(q)}(x)/W^{(q)}(−a) − r W̄_{q+r}(x)
//! - J(x, θ) = M_a Z(·, θ)(x) − r Z(−a, θ) W̄_{q+r}(x), Ĵ = J − Z(−a, θ) I
//! - K(x) = M_a l(x) − r l(−a) W̄_{q+r}(x), H = K − J(·, 0) l(−a)/Z(−a)
//! - C(x) = (σ²/2)(M_a W^{(q)′}(x) − r W̄_{q+r}(x) W^{(q)′}(−a))

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::numeric::try_integrate;
use crate::scale::{ScaleFn, FALLBACK_X_MAX};

#[derive(Clone, Debug)]
pub struct KernelSet {
    model: LevyModel,
    q: f64,
    r: f64,
    a: f64,
    sq: ScaleFn,
    sqr: ScaleFn,
    beta: f64,
    w_neg_a: f64,
}

impl KernelSet {
    pub fn new(model: &LevyModel, q: f64, r: f64, a: f64) -> Result<Self> {
        Self::with_range(model, q, r, a, FALLBACK_X_MAX)
    }

    /// Like [`KernelSet::new`]; `x_max` bounds any fallback scale table.
    pub fn with_range(model: &LevyModel, q: f64, r: f64, a: f64, x_max: f64) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("q must be finite and >= 0, got {q}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("r must be finite and > 0, got {r}")));
        }
        if !(a < 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("a must be finite and < 0, got {a}")));
        }
        let sq = ScaleFn::with_range(model, q, x_max)?;
        let sqr = ScaleFn::with_range(model, q + r, x_max)?;
        let beta = sqr.phi();
        let w_neg_a = sq.w(-a)?;
        Ok(Self { model: model.clone(), q, r, a, sq, sqr, beta, w_neg_a })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Scale functions at rate q.
    pub fn scale_q(&self) -> &ScaleFn {
        &self.sq
    }

    /// Scale functions at rate q + r.
    pub fn scale_qr(&self) -> &ScaleFn {
        &self.sqr
    }

    /// Φ(q + r).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// M_a^{(q,r)} f(x) for f given on the shifted argument y − a.
    pub fn apply_m<F>(&self, f: F, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let head = f(x - self.a)?;
        if x <= 0.0 {
            return Ok(head);
        }
        let conv = try_integrate(|y| Ok::<_, Error>(self.sqr.w(x - y)? * f(y - self.a)?), 0.0, x)?;
        Ok(head + self.r * conv)
    }

    /// M_a f(x) − r f(−a) W̄^{(q+r)}(x), with the subtraction carried inside
    /// the convolution so that constant parts of f cancel exactly.
    fn apply_m_centered<F>(&self, f: F, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let head = f(x - self.a)?;
        if x <= 0.0 {
            return Ok(head);
        }
        let base = f(-self.a)?;
        let conv = try_integrate(|y| Ok::<_, Error>(self.sqr.w(x - y)? * (f(y - self.a)? - base)), 0.0, x)?;
        Ok(head + self.r * conv)
    }

    /// Right derivative of M_a f: M_a f′(x) + r W^{(q+r)}(x) f(−a).
    fn m_prime<F, G>(&self, f: F, fp: G, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
        G: Fn(f64) -> Result<f64>,
    {
        Ok(self.apply_m(fp, x)? + self.r * self.sqr.w(x)? * f(-self.a)?)
    }

    pub fn w_a(&self, x: f64) -> Result<f64> {
        self.apply_m(|y| self.sq.w(y), x)
    }

    pub fn w_a_prime(&self, x: f64) -> Result<f64> {
        self.m_prime(|y| self.sq.w(y), |y| self.sq.w_prime(y), x)
    }

    pub fn w_bar_a(&self, x: f64) -> Result<f64> {
        self.apply_m(|y| self.sq.w_bar(y), x)
    }

    pub fn z_bar_a(&self, x: f64) -> Result<f64> {
        self.apply_m(|y| self.sq.z_bar(y), x)
    }

    pub fn z_a(&self, x: f64, theta: f64) -> Result<f64> {
        self.apply_m(|y| self.sq.z_theta(y, theta), x)
    }

    pub fn z_a_prime(&self, x: f64, theta: f64) -> Result<f64> {
        self.m_prime(|y| self.sq.z_theta(y, theta), |y| self.sq.z_theta_prime(y, theta), x)
    }

    pub fn l_a(&self, x: f64) -> Result<f64> {
        self.apply_m(|y| self.sq.l(y), x)
    }

    pub fn l_a_prime(&self, x: f64) -> Result<f64> {
        self.m_prime(|y| self.sq.l(y), |y| self.sq.l_prime(y), x)
    }

    /// W_a(x) = W^{(q+r)}(x − a) − r ∫_0^{−a} W^{(q+r)}(x − u − a) W^{(q)}(u) du.
    pub fn w_a_alt(&self, x: f64) -> Result<f64> {
        self.alt_form(|y| self.sqr.w(y), |u| self.sq.w(u), x)
    }

    /// Z̄_a(x) = Z̄^{(q+r)}(x − a) − r ∫_0^{−a} W^{(q+r)}(x − u − a) Z̄^{(q)}(u) du.
    pub fn z_bar_a_alt(&self, x: f64) -> Result<f64> {
        self.alt_form(|y| self.sqr.z_bar(y), |u| self.sq.z_bar(u), x)
    }

    fn alt_form<F, G>(&self, head: F, g: G, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
        G: Fn(f64) -> Result<f64>,
    {
        // The integrand vanishes once x − u − a < 0.
        let upper = (-self.a).min(x - self.a);
        let conv = try_integrate(|u| Ok::<_, Error>(self.sqr.w(x - u - self.a)? * g(u)?), 0.0, upper)?;
        Ok(head(x - self.a)? - self.r * conv)
    }

    pub fn i(&self, x: f64) -> Result<f64> {
        Ok(self.apply_m_centered(|y| self.sq.w(y), x)? / self.w_neg_a)
    }

    /// Right derivative I′(x+).
    pub fn i_prime(&self, x: f64) -> Result<f64> {
        Ok(self.w_a_prime(x)? / self.w_neg_a - self.r * self.sqr.w(x)?)
    }

    pub fn j(&self, x: f64, theta: f64) -> Result<f64> {
        self.apply_m_centered(|y| self.sq.z_theta(y, theta), x)
    }

    pub fn j_prime(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(self.z_a_prime(x, theta)? - self.r * self.sq.z_theta(-self.a, theta)? * self.sqr.w(x)?)
    }

    pub fn j_hat(&self, x: f64, theta: f64) -> Result<f64> {
        Ok(self.j(x, theta)? - self.sq.z_theta(-self.a, theta)? * self.i(x)?)
    }

    pub fn k(&self, x: f64) -> Result<f64> {
        self.apply_m_centered(|y| self.sq.l(y), x)
    }

    pub fn k_prime(&self, x: f64) -> Result<f64> {
        Ok(self.l_a_prime(x)? - self.r * self.sq.l(-self.a)? * self.sqr.w(x)?)
    }

    pub fn h(&self, x: f64) -> Result<f64> {
        let ratio = self.sq.l(-self.a)? / self.sq.z(-self.a)?;
        Ok(self.k(x)? - self.j(x, 0.0)? * ratio)
    }

    pub fn h_prime(&self, x: f64) -> Result<f64> {
        let ratio = self.sq.l(-self.a)? / self.sq.z(-self.a)?;
        Ok(self.k_prime(x)? - self.j_prime(x, 0.0)? * ratio)
    }

    /// Creeping kernel C_a^{(q,r)}; needs σ > 0.
    pub fn c(&self, x: f64) -> Result<f64> {
        let sigma = self.model.sigma();
        if sigma == 0.0 {
            return Err(Error::Unsupported("creeping kernel needs sigma > 0".into()));
        }
        Ok(0.5 * sigma * sigma * self.apply_m_centered(|y| self.sq.w_prime(y), x)?)
    }
}

/// I_{−∞}^{(q,r)}(x) = Z^{(q+r)}(x, Φ(q)) − r W̄^{(q+r)}(x).
pub fn i_inf(sqr: &ScaleFn, phi_q: f64, r: f64, x: f64) -> Result<f64> {
    Ok(sqr.z_theta(x, phi_q)? - r * sqr.w_bar(x)?)
}

/// (I_{−∞}^{(q,r)})′(x) = Φ(q) Z^{(q+r)}(x, Φ(q)).
pub fn i_inf_prime(sqr: &ScaleFn, phi_q: f64, x: f64) -> Result<f64> {
    Ok(phi_q * sqr.z_theta(x, phi_q)?)
}

/// Asymptotic ratios as a → −∞ or b → ∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Limit {
    /// lim_{a→−∞} W_a(x)/W^{(q)}(−a) = Z^{(q+r)}(x, Φ(q)).
    WaOverWq { x: f64 },
    /// lim_{b→∞} W_a(b)/W^{(q+r)}(b) = Z^{(q)}(−a, Φ(q+r)).
    WaOverWqr,
    /// lim_{b→∞} Z_a(b, θ)/W^{(q+r)}(b) = Z̃^{(q,r)}(−a, θ), θ < Φ(q) or θ = 0.
    ZaOverWqr { theta: f64 },
    /// lim_{b→∞} W̄_a(b)/W^{(q+r)}(b) = Z̃^{(q,r)}(−a)/q − r/(qΦ(q+r)); infinite at q = 0.
    WbarAOverWqr,
    /// lim_{b→∞} Z̄_a(b)/W^{(q+r)}(b) = (r Z̄^{(q)}(−a) + Z̃^{(q,r)}(−a))/Φ(q+r).
    ZbarAOverWqr,
    /// lim_{b→∞} I(b)/W^{(q+r)}(b) = Z^{(q)′}(−a, Φ(q+r))/(W^{(q)}(−a) Φ(q+r)).
    IOverWqr,
    /// lim_{b→∞} J(b, θ)/W^{(q+r)}(b) = Z̃^{(q,r)}(−a, θ) − r Z^{(q)}(−a, θ)/Φ(q+r).
    JOverWqr { theta: f64 },
    /// lim_{b→∞} K(b)/W^{(q+r)}(b) = (Z̃^{(q,r)}(−a) − ψ′(0+) Z^{(q)}(−a, Φ(q+r)))/Φ(q+r).
    KOverWqr,
    /// I_{−∞}^{(q,r)}(x).
    IInf { x: f64 },
    /// (I_{−∞}^{(q,r)})′(x).
    IInfPrime { x: f64 },
}

/// Closed-form value of an asymptotic ratio. `a` is ignored by the a → −∞ limits.
pub fn eval_limit(model: &LevyModel, q: f64, r: f64, a: f64, which: Limit) -> Result<f64> {
    let sq = ScaleFn::new(model, q)?;
    let sqr = ScaleFn::new(model, q + r)?;
    let phi_q = sq.phi();
    let beta = sqr.phi();
    let theta_guard = |theta: f64| {
        if theta > 0.0 && theta >= phi_q {
            Err(Error::Domain(format!(
                "this ratio limit is stated for theta < Phi(q) = {phi_q}; theta = {theta} is covered only \
                 through analytic continuation of the limiting identities"
            )))
        } else {
            Ok(())
        }
    };
    match which {
        Limit::WaOverWq { x } => sqr.z_theta(x, phi_q),
        Limit::IInf { x } => i_inf(&sqr, phi_q, r, x),
        Limit::IInfPrime { x } => i_inf_prime(&sqr, phi_q, x),
        _ => {
            if !(a < 0.0) {
                return Err(Error::Domain(format!("a must be < 0, got {a}")));
            }
            let y = -a;
            match which {
                Limit::WaOverWqr => sq.z_theta(y, beta),
                Limit::ZaOverWqr { theta } => {
                    theta_guard(theta)?;
                    sq.z_tilde_with_beta(beta, y, theta)
                }
                Limit::WbarAOverWqr => {
                    if q == 0.0 {
                        Ok(f64::INFINITY)
                    } else {
                        Ok(sq.z_tilde_with_beta(beta, y, 0.0)? / q - r / (q * beta))
                    }
                }
                Limit::ZbarAOverWqr => Ok((r * sq.z_bar(y)? + sq.z_tilde_with_beta(beta, y, 0.0)?) / beta),
                Limit::IOverWqr => Ok(sq.z_theta_prime(y, beta)? / (sq.w(y)? * beta)),
                Limit::JOverWqr { theta } => {
                    if theta == 0.0 {
                        return Ok(q * sq.z_theta(y, beta)? / beta);
                    }
                    theta_guard(theta)?;
                    Ok(sq.z_tilde_with_beta(beta, y, theta)? - r * sq.z_theta(y, theta)? / beta)
                }
                Limit::KOverWqr => {
                    let dpsi0 = model.psi_prime_real(0.0);
                    Ok((sq.z_tilde_with_beta(beta, y, 0.0)? - dpsi0 * sq.z_theta(y, beta)?) / beta)
                }
                Limit::WaOverWq { .. } | Limit::IInf { .. } | Limit::IInfPrime { .. } => unreachable!(),
            }
        }
    }
}
