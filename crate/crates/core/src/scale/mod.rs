//! The scale-function family of a model at a fixed discount rate q:
//! W^{(q)}, W^{(q)′}, W̄^{(q)}, W̄̄^{(q)}, Z^{(q)}, Z̄^{(q)}, Z^{(q)}(·, θ),
//! Z̃^{(q,r)}(·, θ) and l^{(q)}.
//!
//! [`ScaleFn`] evaluates the partial-fraction closed form whenever the roots of
//! ψ(θ) = q are simple and falls back to a [`ScaleTable`] filled by numerical
//! Laplace inversion otherwise.

pub mod closed;
pub mod inversion;
pub mod table;

use std::sync::Arc;

use crate::error::Result;
use crate::levy::LevyModel;
use crate::numeric::{integrate, phi1};

pub use closed::PartialFractions;
pub use table::{ScaleTable, TableSource};

/// Default grid step of tabulated scale functions.
pub const DEFAULT_STEP: f64 = 0.005;
/// Range of the fallback table built when no closed form exists.
pub const FALLBACK_X_MAX: f64 = 60.0;

#[derive(Clone, Debug)]
enum Repr {
    Closed(PartialFractions),
    Table(Arc<ScaleTable>),
}

#[derive(Clone, Debug)]
pub struct ScaleFn {
    model: LevyModel,
    q: f64,
    phi: f64,
    repr: Repr,
}

impl ScaleFn {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        Self::with_range(model, q, FALLBACK_X_MAX)
    }

    /// Like [`ScaleFn::new`]; `x_max` bounds the fallback table if one is needed.
    pub fn with_range(model: &LevyModel, q: f64, x_max: f64) -> Result<Self> {
        let phi = model.phi(q)?;
        let repr = match model.roots(q)? {
            Some(rs) => Repr::Closed(PartialFractions::new(model, q, rs)),
            None => {
                let x_max = (x_max / DEFAULT_STEP).ceil() * DEFAULT_STEP;
                Repr::Table(Arc::new(ScaleTable::build_with(model, q, x_max, DEFAULT_STEP, TableSource::Inversion)?))
            }
        };
        Ok(Self { model: model.clone(), q, phi, repr })
    }

    pub fn from_table(table: ScaleTable) -> Result<Self> {
        let model = table.model().clone();
        let q = table.q();
        let phi = model.phi(q)?;
        Ok(Self { model, q, phi, repr: Repr::Table(Arc::new(table)) })
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::Closed(_))
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Φ(q).
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.w(x)),
            Repr::Table(t) => t.eval_w(x),
        }
    }

    /// Right derivative W^{(q)′}(x+); 0 for x < 0.
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.w_prime(x)),
            Repr::Table(t) => t.eval_w_prime(x),
        }
    }

    pub fn w_bar(&self, x: f64) -> Result<f64> {
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.w_bar(x)),
            Repr::Table(t) => t.eval_w_bar(x),
        }
    }

    pub fn w_bar2(&self, x: f64) -> Result<f64> {
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.w_bar2(x)),
            Repr::Table(t) => t.eval_w_bar2(x),
        }
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        Ok(1.0 + self.q * self.w_bar(x)?)
    }

    pub fn z_bar(&self, x: f64) -> Result<f64> {
        Ok(x + self.q * self.w_bar2(x)?)
    }

    /// l^{(q)}(x) = Z̄^{(q)}(x) − ψ′(0+) W̄^{(q)}(x).
    pub fn l(&self, x: f64) -> Result<f64> {
        Ok(self.z_bar(x)? - self.model.psi_prime_real(0.0) * self.w_bar(x)?)
    }

    pub fn l_prime(&self, x: f64) -> Result<f64> {
        Ok(self.z(x)? - self.model.psi_prime_real(0.0) * self.w(x)?)
    }

    /// ∫_0^x e^{θ(x−z)} W(z) dz on the tabulated path.
    fn tilted_integral(t: &ScaleTable, x: f64, theta: f64, power: i32) -> Result<f64> {
        t.eval_w(x)?;
        Ok(integrate(
            |z| {
                let u = x - z;
                u.powi(power) * (theta * u).exp() * t.eval_w(z).unwrap_or(f64::NAN)
            },
            0.0,
            x,
        ))
    }

    pub fn z_theta(&self, x: f64, theta: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok((theta * x).exp());
        }
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.z_theta(x, theta)),
            Repr::Table(t) => {
                let a = self.model.psi_real(theta) - self.q;
                Ok((theta * x).exp() - a * Self::tilted_integral(t, x, theta, 0)?)
            }
        }
    }

    /// Right derivative of Z^{(q)}(·, θ): θZ(x, θ) + (q − ψ(θ))W(x).
    pub fn z_theta_prime(&self, x: f64, theta: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(theta * (theta * x).exp());
        }
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.z_theta_prime(x, theta)),
            Repr::Table(_) => {
                let a = self.model.psi_real(theta) - self.q;
                Ok(theta * self.z_theta(x, theta)? - a * self.w(x)?)
            }
        }
    }

    /// Z̃^{(q,r)}(x, θ), continuous through θ = Φ(q + r).
    pub fn z_tilde(&self, r: f64, x: f64, theta: f64) -> Result<f64> {
        let beta = self.model.phi(self.q + r)?;
        self.z_tilde_with_beta(beta, x, theta)
    }

    /// Z̃^{(q,r)}(x, θ) given β = Φ(q + r).
    pub fn z_tilde_with_beta(&self, beta: f64, x: f64, theta: f64) -> Result<f64> {
        let m = &self.model;
        if x <= 0.0 {
            let a = m.psi_real(theta) - self.q;
            return Ok((theta * x).exp() * (m.psi_dd(beta, theta) - a * x * phi1((beta - theta) * x)));
        }
        match &self.repr {
            Repr::Closed(pf) => Ok(pf.z_tilde(beta, x, theta)),
            Repr::Table(t) => {
                let r = m.psi_real(beta) - self.q;
                if (beta - theta).abs() > 1e-6 * beta.max(1.0) {
                    let a = m.psi_real(theta) - self.q;
                    return Ok((r * self.z_theta(x, theta)? - a * self.z_theta(x, beta)?) / (beta - theta));
                }
                // L'Hôpital at θ = β: ψ′(β) Z(x, β) − r ∂_θ Z(x, θ)|_β.
                let i0 = Self::tilted_integral(t, x, beta, 0)?;
                let i1 = Self::tilted_integral(t, x, beta, 1)?;
                let dz = x * (beta * x).exp() - m.psi_prime_real(beta) * i0 - r * i1;
                Ok(m.psi_prime_real(beta) * self.z_theta(x, beta)? - r * dz)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Phase;

    fn models() -> Vec<LevyModel> {
        vec![
            LevyModel::brownian(0.5, 1.0).unwrap(),
            LevyModel::cramer_lundberg(1.5, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap(),
            LevyModel::jump_diffusion(0.3, 0.8, 1.5, vec![Phase { alpha: 2.0, weight: 0.4 }, Phase { alpha: 0.7, weight: 0.6 }])
                .unwrap(),
        ]
    }

    #[test]
    fn known_closed_forms() {
        // BM(0.5, 1) at q = 0: W(x) = 2(1 − e^{−x}).
        let bm = LevyModel::brownian(0.5, 1.0).unwrap();
        let s = ScaleFn::new(&bm, 0.0).unwrap();
        for &x in &[0.01, 0.5, 3.0] {
            assert!((s.w(x).unwrap() - 2.0 * (1.0 - (-x).exp())).abs() < 1e-14);
        }
        // CL(1.5, 1, Exp(1)) at q = 0: W(x) = 2 − (4/3)e^{−x/3}.
        let cl = LevyModel::cramer_lundberg(1.5, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap();
        let s = ScaleFn::new(&cl, 0.0).unwrap();
        for &x in &[0.0, 0.5, 3.0] {
            let exact = 2.0 - 4.0 / 3.0 * (-x / 3.0f64).exp();
            assert!((s.w(x).unwrap() - exact).abs() < 1e-14, "{x}");
        }
        // W(0) = 1/c for CL(2, 1, Exp(1)).
        let cl2 = LevyModel::cramer_lundberg(2.0, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap();
        assert_eq!(ScaleFn::new(&cl2, 0.05).unwrap().w(0.0).unwrap(), 0.5);
    }

    #[test]
    fn brownian_two_exponential_form_against_inversion() {
        let bm = LevyModel::brownian(0.5, 1.0).unwrap();
        let q = 0.1;
        let d = (0.25f64 + 2.0 * q).sqrt();
        let (tp, tm) = (-0.5 + d, -0.5 - d);
        let closed = ((tp * 1.0f64).exp() - (tm * 1.0f64).exp()) / d;
        let s = ScaleFn::new(&bm, q).unwrap();
        assert!((s.w(1.0).unwrap() - closed).abs() < 1e-14);
        let inv = inversion::invert(&bm, q, inversion::Target::W, 1.0, inversion::Method::Euler);
        assert!((inv - closed).abs() < 1e-8 * closed);
    }

    #[test]
    fn negative_half_line() {
        for m in models() {
            let s = ScaleFn::new(&m, 0.3).unwrap();
            assert_eq!(s.w(-1.0).unwrap(), 0.0);
            assert_eq!(s.w_bar(-1.0).unwrap(), 0.0);
            assert_eq!(s.w_bar2(-1.0).unwrap(), 0.0);
            assert_eq!(s.z(-1.0).unwrap(), 1.0);
            assert_eq!(s.z_bar(-1.0).unwrap(), -1.0);
            assert_eq!(s.l(-1.0).unwrap(), -1.0);
            assert_eq!(s.z_theta(-2.0, 0.3).unwrap(), (-0.6f64).exp());
        }
    }

    #[test]
    fn z_theta_reductions() {
        for m in models() {
            for q in [0.0, 0.05, 0.7] {
                let s = ScaleFn::new(&m, q).unwrap();
                let zt = s.z_theta(1.7, 0.0).unwrap();
                assert!((zt - s.z(1.7).unwrap()).abs() < 1e-12 * zt);
                let phi = s.phi();
                let v = s.z_theta(2.3, phi).unwrap();
                assert!((v - (phi * 2.3).exp()).abs() < 1e-12 * v);
            }
        }
    }

    #[test]
    fn z_theta_matches_definition_by_quadrature() {
        for m in models() {
            let s = ScaleFn::new(&m, 0.05).unwrap();
            for &(x, th) in &[(0.7, 0.2), (3.0, 1.5), (5.0, 0.0)] {
                let a = m.psi_real(th) - 0.05;
                let direct = (th * x).exp() - a * integrate(|z| (th * (x - z)).exp() * s.w(z).unwrap(), 0.0, x);
                let v = s.z_theta(x, th).unwrap();
                assert!((v - direct).abs() < 1e-11 * v.abs().max(1.0), "{x} {th}: {v} vs {direct}");
            }
        }
    }

    #[test]
    fn integrated_functions_match_quadrature() {
        for m in models() {
            let s = ScaleFn::new(&m, 0.4).unwrap();
            for &x in &[1e-3, 0.8, 4.0] {
                let wb = integrate(|z| s.w(z).unwrap(), 0.0, x);
                let wbb = integrate(|z| s.w_bar(z).unwrap(), 0.0, x);
                assert!((s.w_bar(x).unwrap() - wb).abs() < 1e-12 * wb.max(1e-300));
                assert!((s.w_bar2(x).unwrap() - wbb).abs() < 1e-12 * wbb.max(1e-300));
            }
        }
    }

    #[test]
    fn z_tilde_is_continuous_at_beta_and_matches_definition() {
        for m in models() {
            let (q, r) = (0.05, 1.0);
            let s = ScaleFn::new(&m, q).unwrap();
            let beta = m.phi(q + r).unwrap();
            for &x in &[-1.0, 0.0, 0.9, 4.0] {
                let at = s.z_tilde(r, x, beta).unwrap();
                let lo = s.z_tilde(r, x, beta - 1e-6).unwrap();
                let hi = s.z_tilde(r, x, beta + 1e-6).unwrap();
                assert!((hi - lo).abs() <= 1e-5 * at.abs());
                assert!((lo.min(hi) - 1e-12..=lo.max(hi) + 1e-12).contains(&at) || (hi - lo).abs() < 1e-12);
                let th = 0.35;
                let def = (r * s.z_theta(x, th).unwrap() + (q - m.psi_real(th)) * s.z_theta(x, beta).unwrap())
                    / (beta - th);
                let v = s.z_tilde(r, x, th).unwrap();
                assert!((v - def).abs() < 1e-11 * v.abs(), "{x}: {v} vs {def}");
            }
            // θ = 0 specialization
            let x = 1.3;
            let spec = (r * s.z(x).unwrap() + q * s.z_theta(x, beta).unwrap()) / beta;
            assert!((s.z_tilde(r, x, 0.0).unwrap() - spec).abs() < 1e-12 * spec);
        }
        // q = 0, x ≤ 0, θ = 0 → r/Φ(r)
        let bm = LevyModel::brownian(0.5, 1.0).unwrap();
        let s = ScaleFn::new(&bm, 0.0).unwrap();
        let v = s.z_tilde(1.0, -0.5, 0.0).unwrap();
        assert!((v - 1.0 / bm.phi(1.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn table_path_agrees_with_closed_form() {
        for m in models() {
            let q = 0.05;
            let closed = ScaleFn::new(&m, q).unwrap();
            let table = ScaleFn::from_table(ScaleTable::build_with(&m, q, 12.0, 0.005, TableSource::Inversion).unwrap())
                .unwrap();
            for &x in &[0.013, 1.1, 5.55, 9.0] {
                for (a, b) in [
                    (closed.w(x).unwrap(), table.w(x).unwrap()),
                    (closed.w_prime(x).unwrap(), table.w_prime(x).unwrap()),
                    (closed.w_bar2(x).unwrap(), table.w_bar2(x).unwrap()),
                    (closed.z_theta(x, 0.8).unwrap(), table.z_theta(x, 0.8).unwrap()),
                    (closed.z_tilde(1.0, x, 0.3).unwrap(), table.z_tilde(1.0, x, 0.3).unwrap()),
                ] {
                    assert!((a - b).abs() < 1e-7 * a.abs().max(1e-3), "x={x}: {a} vs {b}");
                }
                let beta = m.phi(q + 1.0).unwrap();
                let a = closed.z_tilde(1.0, x, beta).unwrap();
                let b = table.z_tilde(1.0, x, beta).unwrap();
                assert!((a - b).abs() < 1e-7 * a.abs(), "x={x}: {a} vs {b}");
            }
        }
    }
}
