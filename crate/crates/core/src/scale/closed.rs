//! Partial-fraction scale functions. With ψ rational and all roots θ_k of
//! ψ(θ) = q simple, 1/(ψ(θ) − q) = Σ_k w_k/(θ − θ_k) with w_k = 1/ψ′(θ_k),
//! so W^{(q)}(x) = Σ_k w_k e^{θ_k x}. Every θ-dependent function is written
//! through divided differences of ψ so that no term is formed as a difference
//! of large exponentials.

use crate::levy::{LevyModel, RootSet};
use crate::numeric::{phi1, phi2};

#[derive(Clone, Debug)]
pub struct PartialFractions {
    model: LevyModel,
    q: f64,
    roots: Vec<f64>,
    weights: Vec<f64>,
    w0: f64,
    wp0: f64,
}

impl PartialFractions {
    pub fn new(model: &LevyModel, q: f64, rs: RootSet) -> Self {
        Self {
            model: model.clone(),
            q,
            roots: rs.roots,
            weights: rs.weights,
            w0: model.w_at_zero(),
            wp0: model.w_prime_at_zero(q),
        }
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.roots.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x == 0.0 {
            self.w0
        } else {
            // Σ w_k = W(0), so W(x) = W(0) + Σ w_k (e^{θ_k x} − 1).
            self.w0 + self.terms().map(|(t, w)| w * (t * x).exp_m1()).sum::<f64>()
        }
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x == 0.0 {
            self.wp0
        } else {
            self.terms().map(|(t, w)| w * t * (t * x).exp()).sum()
        }
    }

    pub fn w_bar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x * self.terms().map(|(t, w)| w * phi1(t * x)).sum::<f64>()
        }
    }

    pub fn w_bar2(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x * x * self.terms().map(|(t, w)| w * phi2(t * x)).sum::<f64>()
        }
    }

    pub fn z_theta(&self, x: f64, theta: f64) -> f64 {
        if x <= 0.0 {
            (theta * x).exp()
        } else {
            self.terms().map(|(t, w)| w * self.model.psi_dd(theta, t) * (t * x).exp()).sum()
        }
    }

    /// Right derivative in x.
    pub fn z_theta_prime(&self, x: f64, theta: f64) -> f64 {
        if x < 0.0 {
            theta * (theta * x).exp()
        } else {
            self.terms().map(|(t, w)| w * self.model.psi_dd(theta, t) * t * (t * x).exp()).sum()
        }
    }

    /// Z̃^{(q,r)}(x, θ) with β = Φ(q + r).
    pub fn z_tilde(&self, beta: f64, x: f64, theta: f64) -> f64 {
        let m = &self.model;
        if x <= 0.0 {
            let a = m.psi_real(theta) - self.q;
            (theta * x).exp() * (m.psi_dd(beta, theta) - a * x * phi1((beta - theta) * x))
        } else {
            self.terms()
                .map(|(t, w)| w * m.psi_dd(beta, t) * m.psi_dd(theta, t) * (t * x).exp())
                .sum()
        }
    }
}
