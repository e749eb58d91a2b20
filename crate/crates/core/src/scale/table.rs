//! Tabulated scale functions on a uniform grid with cubic Hermite
//! interpolation. Filled from the partial-fraction closed form when the roots
//! of ψ(θ) = q are simple, otherwise by numerical Laplace inversion.

use crate::error::{Error, Result};
use crate::levy::{LevyModel, VariationClass};
use crate::scale::closed::PartialFractions;
use crate::scale::inversion::{invert, Method, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableSource {
    /// Closed form when available, inversion otherwise.
    Auto,
    ClosedForm,
    Inversion,
}

#[derive(Clone, Debug)]
pub struct ScaleTable {
    model: LevyModel,
    q: f64,
    h: f64,
    x_max: f64,
    w: Vec<f64>,
    wp: Vec<f64>,
    wbar: Vec<f64>,
    wbar2: Vec<f64>,
    /// Slopes used to interpolate W′ (finite differences of the W′ column).
    wpp: Vec<f64>,
}

fn hermite(t: f64, h: f64, y0: f64, m0: f64, y1: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (3.0 * t2 - 2.0 * t3) * y1
        + (t3 - t2) * h * m1
}

impl ScaleTable {
    pub fn build(model: &LevyModel, q: f64, x_max: f64, h: f64) -> Result<Self> {
        Self::build_with(model, q, x_max, h, TableSource::Auto)
    }

    pub fn build_with(model: &LevyModel, q: f64, x_max: f64, h: f64, source: TableSource) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("q must be finite and >= 0, got {q}")));
        }
        if !(x_max > 0.0 && x_max.is_finite() && h > 0.0 && h <= x_max) {
            return Err(Error::Domain(format!("need 0 < h <= x_max, got h={h}, x_max={x_max}")));
        }
        let n = (x_max / h).round() as usize;
        if ((n as f64) * h - x_max).abs() > 1e-9 * x_max {
            return Err(Error::Domain(format!("x_max={x_max} is not a multiple of h={h}")));
        }
        let closed = match source {
            TableSource::Inversion => None,
            _ => model.roots(q)?.map(|rs| PartialFractions::new(model, q, rs)),
        };
        if source == TableSource::ClosedForm && closed.is_none() {
            return Err(Error::Construction("closed form unavailable: repeated roots".into()));
        }
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let (w, wp, wbar, wbar2) = match &closed {
            Some(pf) => (
                xs.iter().map(|&x| pf.w(x)).collect::<Vec<_>>(),
                xs.iter().map(|&x| pf.w_prime(x)).collect::<Vec<_>>(),
                xs.iter().map(|&x| pf.w_bar(x)).collect::<Vec<_>>(),
                xs.iter().map(|&x| pf.w_bar2(x)).collect::<Vec<_>>(),
            ),
            None => {
                let col = |target: Target, at0: f64| -> Vec<f64> {
                    xs.iter()
                        .map(|&x| if x == 0.0 { at0 } else { invert(model, q, target, x, Method::Talbot) })
                        .collect()
                };
                (
                    col(Target::W, model.w_at_zero()),
                    col(Target::WPrime, model.w_prime_at_zero(q)),
                    col(Target::WBar, 0.0),
                    col(Target::WBar2, 0.0),
                )
            }
        };
        let mut wpp = vec![0.0; n + 1];
        for i in 0..=n {
            wpp[i] = if n == 0 {
                0.0
            } else if i == 0 {
                (-3.0 * wp[0] + 4.0 * wp[1.min(n)] - wp[2.min(n)]) / (2.0 * h)
            } else if i == n {
                (3.0 * wp[n] - 4.0 * wp[n - 1] + wp[n.saturating_sub(2)]) / (2.0 * h)
            } else {
                (wp[i + 1] - wp[i - 1]) / (2.0 * h)
            };
        }
        let table = Self { model: model.clone(), q, h, x_max, w, wp, wbar, wbar2, wpp };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        if self.w.iter().chain(&self.wp).chain(&self.wbar).chain(&self.wbar2).any(|v| !v.is_finite()) {
            return bad("non-finite tabulated value".into());
        }
        let w0 = self.w[0];
        match self.model.classify_variation() {
            VariationClass::BoundedVariation => {
                let expect = 1.0 / self.model.drift();
                if (w0 - expect).abs() > 1e-8 * expect {
                    return bad(format!("W(0) = {w0}, expected 1/c = {expect}"));
                }
            }
            VariationClass::UnboundedVariation => {
                if w0 != 0.0 {
                    return bad(format!("W(0) = {w0}, expected 0"));
                }
            }
        }
        if self.wbar[0] != 0.0 || self.wbar2[0] != 0.0 {
            return bad("integrated scale functions must vanish at 0".into());
        }
        for i in 1..self.w.len() {
            if !(self.w[i] > self.w[i - 1]) {
                return bad(format!("W not strictly increasing at x = {}", i as f64 * self.h));
            }
        }
        let phi = self.model.phi(self.q)?;
        let dpsi = self.model.psi_prime_real(phi);
        let bound = if dpsi > 0.0 { 1.0 / dpsi } else { f64::INFINITY };
        let mut prev = 0.0;
        for (i, &w) in self.w.iter().enumerate() {
            let v = (-phi * i as f64 * self.h).exp() * w;
            if v < prev * (1.0 - 1e-9) {
                return bad(format!("e^(-Phi x) W(x) decreases at x = {}", i as f64 * self.h));
            }
            if v > bound * (1.0 + 1e-8) {
                return bad(format!("e^(-Phi x) W(x) exceeds 1/psi'(Phi) at x = {}", i as f64 * self.h));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    /// Node abscissa i·h.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn node_w(&self) -> &[f64] {
        &self.w
    }

    pub fn node_w_prime(&self) -> &[f64] {
        &self.wp
    }

    pub fn node_w_bar(&self) -> &[f64] {
        &self.wbar
    }

    pub fn node_w_bar2(&self) -> &[f64] {
        &self.wbar2
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if x > self.x_max * (1.0 + 1e-12) || x.is_nan() {
            return Err(Error::OutOfRange { x, x_max: self.x_max });
        }
        let n = self.w.len() - 1;
        let s = (x / self.h).min(n as f64);
        let i = (s.floor() as usize).min(n.saturating_sub(1));
        Ok((i, s - i as f64))
    }

    fn interp(&self, x: f64, y: &[f64], slope: &[f64]) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        if y.len() == 1 {
            return Ok(y[0]);
        }
        Ok(hermite(t, self.h, y[i], slope[i], y[i + 1], slope[i + 1]))
    }

    pub fn eval_w(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        self.interp(x, &self.w, &self.wp)
    }

    pub fn eval_w_prime(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        self.interp(x, &self.wp, &self.wpp)
    }

    pub fn eval_w_bar(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        self.interp(x, &self.wbar, &self.w)
    }

    pub fn eval_w_bar2(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        self.interp(x, &self.wbar2, &self.wbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Phase;

    #[test]
    fn node_count_and_boundary_values() {
        let cl = LevyModel::cramer_lundberg(2.0, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap();
        let t = ScaleTable::build(&cl, 0.05, 10.0, 0.01).unwrap();
        assert_eq!(t.len(), 1001);
        assert!((t.eval_w(0.0).unwrap() - 0.5).abs() < 1e-14);
        let bm = LevyModel::brownian(0.5, 1.0).unwrap();
        let t = ScaleTable::build(&bm, 0.05, 10.0, 0.01).unwrap();
        assert_eq!(t.eval_w(0.0).unwrap(), 0.0);
        assert_eq!(t.eval_w(-1.0).unwrap(), 0.0);
        assert!(matches!(t.eval_w(10.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn inversion_table_matches_closed_form_for_compound_poisson() {
        let cl = LevyModel::cramer_lundberg(1.5, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap();
        let a = ScaleTable::build_with(&cl, 0.05, 10.0, 0.05, TableSource::ClosedForm).unwrap();
        let b = ScaleTable::build_with(&cl, 0.05, 10.0, 0.05, TableSource::Inversion).unwrap();
        for i in 0..a.len() {
            let (u, v) = (a.node_w()[i], b.node_w()[i]);
            assert!((u - v).abs() <= 1e-10 * u, "node {i}: {u} vs {v}");
        }
    }

    #[test]
    fn repeated_root_falls_back_to_inversion() {
        // ψ(θ) = θ²/2 at q = 0 has a double root at 0; W(x) = 2x.
        let bm = LevyModel::brownian(0.0, 1.0).unwrap();
        let t = ScaleTable::build(&bm, 0.0, 5.0, 0.01).unwrap();
        for &x in &[0.37, 1.0, 4.99] {
            assert!((t.eval_w(x).unwrap() - 2.0 * x).abs() < 1e-8);
            assert!((t.eval_w_bar(x).unwrap() - x * x).abs() < 1e-8);
        }
    }
}
