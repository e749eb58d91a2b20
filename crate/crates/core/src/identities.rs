//! Fluctuation identities as pure scalar functions of (model, q, r, a, b, x, θ).
//!
//! Every identity lives in a data-driven registry: an id, the modes it
//! supports (finite interval, a → −∞, b → ∞, both), the meaning of the value,
//! a formula citation per mode and the evaluating closure. Values the theory
//! declares infinite are returned as `f64::INFINITY`.
//!
//! Identities are evaluated literally from their formulas for any x ≤ b,
//! including x < a; the probabilistic meaning only holds for a ≤ x ≤ b.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{i_inf, i_inf_prime, KernelSet};
use crate::levy::LevyModel;
use crate::scale::{ScaleFn, FALLBACK_X_MAX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Finite,
    AInf,
    BInf,
    Perpetual,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Finite => "finite",
            Mode::AInf => "a_inf",
            Mode::BInf => "b_inf",
            Mode::Perpetual => "perpetual",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "finite" => Ok(Mode::Finite),
            "a_inf" => Ok(Mode::AInf),
            "b_inf" => Ok(Mode::BInf),
            "perpetual" => Ok(Mode::Perpetual),
            _ => Err(Error::Config(format!("unknown mode `{s}`; expected finite, a_inf, b_inf or perpetual"))),
        }
    }

    /// Whether the lower barrier a is finite in this mode.
    pub fn uses_a(self) -> bool {
        matches!(self, Mode::Finite | Mode::BInf)
    }

    /// Whether the upper barrier b is finite in this mode.
    pub fn uses_b(self) -> bool {
        matches!(self, Mode::Finite | Mode::AInf)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Meaning {
    ExpectedNpv,
    LaplaceTransform,
    Probability,
    ExpectedDiscountedOvershoot,
    /// Discounted expectation of a nonnegative functional that is not bounded by 1.
    DiscountedExpectation,
}

impl Meaning {
    pub fn is_npv(self) -> bool {
        matches!(self, Meaning::ExpectedNpv)
    }

    /// Values of this kind lie in [0, 1].
    pub fn is_bounded_by_one(self) -> bool {
        matches!(self, Meaning::LaplaceTransform | Meaning::Probability)
    }
}

/// Which inputs an identity reads besides q and x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Needs {
    /// Interval with a < b only (classical identities).
    Classical,
    /// Parisian rate r > 0 and a < 0 < b.
    Parisian,
}

/// Scalar inputs. Entries an identity or mode does not use are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub q: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRequest {
    pub id: String,
    pub mode: Mode,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityValue {
    pub value: f64,
    pub meaning: Meaning,
    pub formula_citation: &'static str,
}

type Formula = fn(&Ctx) -> Result<f64>;

pub struct IdentitySpec {
    pub id: &'static str,
    pub needs: Needs,
    pub modes: &'static [Mode],
    pub meaning: Meaning,
    pub uses_theta: bool,
    /// Requires σ > 0 (creeping).
    pub needs_sigma: bool,
    pub description: &'static str,
    citations: &'static [(Mode, &'static str)],
    formula: Formula,
}

impl IdentitySpec {
    pub fn citation(&self, mode: Mode) -> &'static str {
        self.citations.iter().find(|(m, _)| *m == mode).map(|(_, c)| *c).unwrap_or("")
    }

    pub fn supports(&self, mode: Mode) -> bool {
        self.modes.contains(&mode)
    }

    /// The mode used when a caller does not name one.
    pub fn default_mode(&self) -> Mode {
        self.modes[0]
    }
}

impl std::fmt::Debug for IdentitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentitySpec").field("id", &self.id).field("modes", &self.modes).finish()
    }
}

/// Evaluation context: the request plus lazily built scale functions.
struct Ctx<'m> {
    model: &'m LevyModel,
    mode: Mode,
    q: f64,
    r: f64,
    a: f64,
    b: f64,
    x: f64,
    theta: f64,
    sq: ScaleFn,
    sqr: Option<ScaleFn>,
    ks: Option<KernelSet>,
}

impl Ctx<'_> {
    fn ks(&self) -> Result<&KernelSet> {
        self.ks.as_ref().ok_or_else(|| Error::Internal("kernel set requested without a finite a".into()))
    }

    fn sqr(&self) -> Result<&ScaleFn> {
        self.sqr.as_ref().ok_or_else(|| Error::Internal("q + r scale functions requested without r".into()))
    }

    fn beta(&self) -> Result<f64> {
        Ok(self.sqr()?.phi())
    }

    fn phi_q(&self) -> f64 {
        self.sq.phi()
    }

    fn dpsi0(&self) -> f64 {
        self.model.psi_prime_real(0.0)
    }

    fn half_sigma2(&self) -> f64 {
        0.5 * self.model.sigma() * self.model.sigma()
    }

    fn w2qr(&self, y: f64) -> Result<f64> {
        self.sqr()?.w_bar2(y)
    }

    fn i_inf(&self, y: f64) -> Result<f64> {
        i_inf(self.sqr()?, self.phi_q(), self.r, y)
    }

    fn i_inf_prime(&self, y: f64) -> Result<f64> {
        i_inf_prime(self.sqr()?, self.phi_q(), y)
    }

    /// W^{(q)}(−a) Φ(q+r)/Z^{(q)′}(−a, Φ(q+r)).
    fn b_inf_factor(&self) -> Result<f64> {
        let beta = self.beta()?;
        Ok(self.sq.w(-self.a)? * beta / self.sq.z_theta_prime(-self.a, beta)?)
    }

    /// Perpetual-type quantities under a → −∞ are finite iff q > 0 or ψ′(0+) < 0.
    fn a_inf_finite(&self) -> bool {
        self.q > 0.0 || self.dpsi0() < 0.0
    }
}

fn not_supported(c: &Ctx) -> Result<f64> {
    Err(Error::Internal(format!("mode {} reached a formula without it", c.mode)))
}

// Classical identities for X, reflected above at b, reflected below at a.

fn classic_up(c: &Ctx) -> Result<f64> {
    Ok(c.sq.w(c.x - c.a)? / c.sq.w(c.b - c.a)?)
}

fn classic_down(c: &Ctx) -> Result<f64> {
    let (y, l) = (c.x - c.a, c.b - c.a);
    Ok(c.sq.z_theta(y, c.theta)? - c.sq.z_theta(l, c.theta)? * c.sq.w(y)? / c.sq.w(l)?)
}

fn classic_down_inf(c: &Ctx) -> Result<f64> {
    // (ψ(θ) − q)/(θ − Φ(q)) is the divided difference of ψ, continuous at θ = Φ(q).
    let y = c.x - c.a;
    Ok(c.sq.z_theta(y, c.theta)? - c.sq.w(y)? * c.model.psi_dd(c.theta, c.phi_q()))
}

fn classic_creep(c: &Ctx) -> Result<f64> {
    let y = c.x - c.a;
    if y <= 0.0 {
        return Err(Error::Domain(format!("creeping identity needs x > a, got x - a = {y}")));
    }
    Ok(c.half_sigma2() * (c.sq.w_prime(y)? - c.phi_q() * c.sq.w(y)?))
}

fn classic_creep_two_sided(c: &Ctx) -> Result<f64> {
    let (y, l) = (c.x - c.a, c.b - c.a);
    Ok(c.half_sigma2() * (c.sq.w_prime(y)? - c.sq.w(y)? / c.sq.w(l)? * c.sq.w_prime(l)?))
}

fn refl_above_down_time(c: &Ctx) -> Result<f64> {
    let (y, l) = (c.x - c.a, c.b - c.a);
    Ok(c.sq.z(y)? - c.q * c.sq.w(l)? * c.sq.w(y)? / c.sq.w_prime(l)?)
}

fn refl_above_dividends(c: &Ctx) -> Result<f64> {
    Ok(c.sq.w(c.x - c.a)? / c.sq.w_prime(c.b - c.a)?)
}

fn refl_below_up_time(c: &Ctx) -> Result<f64> {
    Ok(c.sq.z(c.x - c.a)? / c.sq.z(c.b - c.a)?)
}

fn refl_below_injection(c: &Ctx) -> Result<f64> {
    let (y, l) = (c.x - c.a, c.b - c.a);
    Ok(-c.sq.l(y)? + c.sq.z(y)? / c.sq.z(l)? * c.sq.l(l)?)
}

// Auxiliary identities for X killed on leaving [0, b] (or reflected at b) with rate q + r.

fn lemma_w_overshoot(c: &Ctx) -> Result<f64> {
    let (ks, sqr) = (c.ks()?, c.sqr()?);
    Ok(ks.w_a(c.x)? - sqr.w(c.x)? / sqr.w(c.b)? * ks.w_a(c.b)?)
}

fn lemma_w_overshoot_reflected(c: &Ctx) -> Result<f64> {
    let (ks, sqr) = (c.ks()?, c.sqr()?);
    Ok(ks.w_a(c.x)? - sqr.w(c.x)? / sqr.w_prime(c.b)? * ks.w_a_prime(c.b)?)
}

fn lemma_z_overshoot(c: &Ctx) -> Result<f64> {
    let (ks, sqr) = (c.ks()?, c.sqr()?);
    Ok(ks.z_a(c.x, c.theta)? - sqr.w(c.x)? / sqr.w(c.b)? * ks.z_a(c.b, c.theta)?)
}

fn lemma_z_overshoot_reflected(c: &Ctx) -> Result<f64> {
    let (ks, sqr) = (c.ks()?, c.sqr()?);
    Ok(ks.z_a(c.x, c.theta)? - sqr.w(c.x)? / sqr.w_prime(c.b)? * ks.z_a_prime(c.b, c.theta)?)
}

fn lemma_hx(c: &Ctx) -> Result<f64> {
    let (ks, sqr) = (c.ks()?, c.sqr()?);
    Ok(ks.i(c.x)? - sqr.w(c.x)? / sqr.w(c.b)? * ks.i(c.b)?)
}

fn lemma_x_at_er(c: &Ctx) -> Result<f64> {
    let sqr = c.sqr()?;
    Ok(c.r * (sqr.w_bar2(c.b)? / sqr.w(c.b)? * sqr.w(c.x)? - sqr.w_bar2(c.x)?))
}

// Parisian reflection above at 0, killed on leaving [a, b].

fn xr_dividends(c: &Ctx) -> Result<f64> {
    match c.mode {
        Mode::Finite => {
            let ks = c.ks()?;
            Ok(c.r * (c.w2qr(c.b)? * ks.i(c.x)? / ks.i(c.b)? - c.w2qr(c.x)?))
        }
        Mode::AInf => Ok(c.r * (c.w2qr(c.b)? * c.i_inf(c.x)? / c.i_inf(c.b)? - c.w2qr(c.x)?)),
        Mode::BInf => {
            let ks = c.ks()?;
            let beta = c.beta()?;
            let ratio = c.sq.w(-c.a)? / c.sq.z_theta_prime(-c.a, beta)?;
            Ok(c.r * (ks.i(c.x)? / beta * ratio - c.w2qr(c.x)?))
        }
        Mode::Perpetual => {
            if !c.a_inf_finite() {
                return Ok(f64::INFINITY);
            }
            let (beta, phi) = (c.beta()?, c.phi_q());
            Ok((beta - phi) / (beta * phi) * c.i_inf(c.x)? - c.r * c.w2qr(c.x)?)
        }
    }
}

fn xr_up(c: &Ctx) -> Result<f64> {
    match c.mode {
        Mode::Finite => {
            let ks = c.ks()?;
            Ok(ks.i(c.x)? / ks.i(c.b)?)
        }
        Mode::AInf => Ok(c.i_inf(c.x)? / c.i_inf(c.b)?),
        _ => not_supported(c),
    }
}

fn xr_down(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    match c.mode {
        Mode::Finite => Ok(ks.j(c.x, c.theta)? - ks.i(c.x)? / ks.i(c.b)? * ks.j(c.b, c.theta)?),
        Mode::BInf => {
            let beta = c.beta()?;
            let zt = c.sq.z_tilde_with_beta(beta, -c.a, c.theta)?;
            let tail = zt - c.r * c.sq.z_theta(-c.a, c.theta)? / beta;
            Ok(ks.j(c.x, c.theta)? - ks.i(c.x)? * tail * c.b_inf_factor()?)
        }
        _ => not_supported(c),
    }
}

fn xr_creep(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    match c.mode {
        Mode::Finite => Ok(ks.c(c.x)? - ks.i(c.x)? / ks.i(c.b)? * ks.c(c.b)?),
        Mode::BInf => {
            let beta = c.beta()?;
            let bracket = beta - c.r * c.sq.w_prime(-c.a)? / c.sq.z_theta_prime(-c.a, beta)?;
            Ok(ks.c(c.x)? - ks.i(c.x)? * c.sq.w(-c.a)? * c.half_sigma2() * bracket)
        }
        _ => not_supported(c),
    }
}

fn xr_overshoot(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    match c.mode {
        Mode::Finite => Ok(ks.i(c.x)? / ks.i(c.b)? * ks.k(c.b)? - ks.k(c.x)?),
        Mode::BInf => {
            let beta = c.beta()?;
            let zt = c.sq.z_tilde_with_beta(beta, -c.a, 0.0)?;
            let tail = zt - c.dpsi0() * c.sq.z_theta(-c.a, beta)?;
            let factor = c.sq.w(-c.a)? / c.sq.z_theta_prime(-c.a, beta)?;
            Ok(ks.i(c.x)? * factor * tail - ks.k(c.x)?)
        }
        _ => not_supported(c),
    }
}

// Parisian reflection above at 0 and classical reflection above at b, killed below a.

fn xtilde_div_periodic(c: &Ctx) -> Result<f64> {
    let w_bar_b = c.sqr()?.w_bar(c.b)?;
    match c.mode {
        Mode::Finite => {
            let ks = c.ks()?;
            Ok(c.r * (w_bar_b * ks.i(c.x)? / ks.i_prime(c.b)? - c.w2qr(c.x)?))
        }
        Mode::AInf => {
            if !c.a_inf_finite() {
                return Ok(f64::INFINITY);
            }
            Ok(c.r * (w_bar_b * c.i_inf(c.x)? / c.i_inf_prime(c.b)? - c.w2qr(c.x)?))
        }
        _ => not_supported(c),
    }
}

fn xtilde_div_singular(c: &Ctx) -> Result<f64> {
    match c.mode {
        Mode::Finite => {
            let ks = c.ks()?;
            Ok(ks.i(c.x)? / ks.i_prime(c.b)?)
        }
        Mode::AInf => {
            if !c.a_inf_finite() {
                return Ok(f64::INFINITY);
            }
            Ok(c.i_inf(c.x)? / c.i_inf_prime(c.b)?)
        }
        _ => not_supported(c),
    }
}

fn xtilde_down(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    Ok(ks.j(c.x, c.theta)? - ks.j_prime(c.b, c.theta)? * ks.i(c.x)? / ks.i_prime(c.b)?)
}

fn xtilde_overshoot(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    Ok(ks.i(c.x)? / ks.i_prime(c.b)? * ks.k_prime(c.b)? - ks.k(c.x)?)
}

// Parisian reflection above at 0 and classical reflection below at a, killed above b.

fn yr_dividends(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    match c.mode {
        Mode::Finite => Ok(c.r * (c.w2qr(c.b)? * ks.j(c.x, 0.0)? / ks.j(c.b, 0.0)? - c.w2qr(c.x)?)),
        Mode::BInf => {
            if c.q == 0.0 {
                return Ok(f64::INFINITY);
            }
            let beta = c.beta()?;
            let denom = c.q * beta * c.sq.z_theta(-c.a, beta)?;
            Ok(c.r * (ks.j(c.x, 0.0)? / denom - c.w2qr(c.x)?))
        }
        _ => not_supported(c),
    }
}

fn yr_injection(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    match c.mode {
        Mode::Finite => Ok(ks.h(c.b)? * ks.j(c.x, 0.0)? / ks.j(c.b, 0.0)? - ks.h(c.x)?),
        Mode::BInf => {
            if c.q == 0.0 {
                return Err(Error::Precondition(
                    "yr.injection b_inf (perpetual capital injections under Parisian dividends) is only \
                     available for q > 0"
                        .into(),
                ));
            }
            let (q, r, y) = (c.q, c.r, -c.a);
            let beta = c.beta()?;
            let sqr = c.sqr()?;
            let coef = r * c.sq.z(y)? / (q * beta * c.sq.z_theta(y, beta)?) + 1.0 / beta;
            let w_bar_x = sqr.w_bar(c.x)?;
            Ok(coef * (ks.z_a(c.x, 0.0)? - r * c.sq.z(y)? * w_bar_x) + r * c.sq.z_bar(y)? * w_bar_x
                - (ks.z_bar_a(c.x)? + c.dpsi0() / q))
        }
        _ => not_supported(c),
    }
}

fn yr_up(c: &Ctx) -> Result<f64> {
    let ks = c.ks()?;
    Ok(ks.j(c.x, 0.0)? / ks.j(c.b, 0.0)?)
}

// Parisian reflection above at 0 with classical reflection at a and b (no killing).

fn ytilde_div_periodic(c: &Ctx) -> Result<f64> {
    if c.q == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ks = c.ks()?;
    let w_bar_b = c.sqr()?.w_bar(c.b)?;
    Ok(c.r * (w_bar_b * ks.j(c.x, 0.0)? / ks.j_prime(c.b, 0.0)? - c.w2qr(c.x)?))
}

fn ytilde_div_singular(c: &Ctx) -> Result<f64> {
    if c.q == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ks = c.ks()?;
    Ok(ks.j(c.x, 0.0)? / ks.j_prime(c.b, 0.0)?)
}

fn ytilde_injection(c: &Ctx) -> Result<f64> {
    if c.q == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ks = c.ks()?;
    Ok(-ks.h(c.x)? + ks.j(c.x, 0.0)? / ks.j_prime(c.b, 0.0)? * ks.h_prime(c.b)?)
}

use Meaning::*;
use Mode::*;
use Needs::*;

static REGISTRY: &[IdentitySpec] = &[
    IdentitySpec {
        id: "classic.up",
        needs: Classical,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q tau_b+}; tau_b+ < tau_a-] for X",
        citations: &[(Finite, "two-sided exit of X, upward: W(x-a)/W(b-a)")],
        formula: classic_up,
    },
    IdentitySpec {
        id: "classic.down",
        needs: Classical,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-q tau_a- - theta (a - X(tau_a-))}; tau_a- < tau_b+] for X",
        citations: &[(Finite, "two-sided exit of X, downward with overshoot: Z(x-a,theta) - Z(b-a,theta) W(x-a)/W(b-a)")],
        formula: classic_down,
    },
    IdentitySpec {
        id: "classic.down.inf",
        needs: Classical,
        modes: &[BInf],
        meaning: LaplaceTransform,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-q tau_a- - theta (a - X(tau_a-))}; tau_a- < inf] for X",
        citations: &[(BInf, "one-sided downward exit of X: Z(x-a,theta) - W(x-a) (psi(theta)-q)/(theta-Phi(q))")],
        formula: classic_down_inf,
    },
    IdentitySpec {
        id: "classic.creep",
        needs: Classical,
        modes: &[BInf],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: true,
        description: "E_x[e^{-q tau_a-}; X(tau_a-) = a, tau_a- < inf] for X",
        citations: &[(BInf, "downward creeping of X: (sigma^2/2)[W'(x-a) - Phi(q) W(x-a)]")],
        formula: classic_creep,
    },
    IdentitySpec {
        id: "classic.creep.two_sided",
        needs: Classical,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: true,
        description: "E_x[e^{-q tau_a-}; X(tau_a-) = a, tau_a- < tau_b+] for X",
        citations: &[(Finite, "two-sided creeping of X: C_{b-a}(x-a) = (sigma^2/2)(W'(x-a) - W(x-a) W'(b-a)/W(b-a))")],
        formula: classic_creep_two_sided,
    },
    IdentitySpec {
        id: "refl_above.down_time",
        needs: Classical,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q tau~_{a,b}-}] for X reflected above at b",
        citations: &[(Finite, "down-crossing of X reflected at b: Z(x-a) - q W(b-a) W(x-a)/W'((b-a)+)")],
        formula: refl_above_down_time,
    },
    IdentitySpec {
        id: "refl_above.dividends",
        needs: Classical,
        modes: &[Finite],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{tau~_{a,b}-} e^{-qt} dL^b(t)] for X reflected above at b",
        citations: &[(Finite, "barrier dividends of X reflected at b, killed below a: W(x-a)/W'((b-a)+)")],
        formula: refl_above_dividends,
    },
    IdentitySpec {
        id: "refl_below.up_time",
        needs: Classical,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q eta_{a,b}+}] for X reflected below at a",
        citations: &[(Finite, "up-crossing of X reflected at a: Z(x-a)/Z(b-a)")],
        formula: refl_below_up_time,
    },
    IdentitySpec {
        id: "refl_below.injection",
        needs: Classical,
        modes: &[Finite],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{eta_{a,b}+} e^{-qt} dR^a(t)] for X reflected below at a",
        citations: &[(Finite, "capital injections of X reflected at a, killed above b: -l(x-a) + Z(x-a) l(b-a)/Z(b-a)")],
        formula: refl_below_injection,
    },
    IdentitySpec {
        id: "lemma.W_overshoot",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-(q+r) tau_0-} W(X(tau_0-) - a); tau_0- < tau_b+]",
        citations: &[(Finite, "W-overshoot of X below 0 before b: W_a(x) - W_{q+r}(x) W_a(b)/W_{q+r}(b)")],
        formula: lemma_w_overshoot,
    },
    IdentitySpec {
        id: "lemma.W_overshoot_reflected",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-(q+r) tau~_{0,b}-} W(Ybar^b(tau~_{0,b}-) - a)]",
        citations: &[(Finite, "W-overshoot of X reflected at b below 0: W_a(x) - W_{q+r}(x) W_a'(b+)/W_{q+r}'(b+)")],
        formula: lemma_w_overshoot_reflected,
    },
    IdentitySpec {
        id: "lemma.Z_overshoot",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-(q+r) tau_0-} Z(X(tau_0-) - a, theta); tau_0- < tau_b+]",
        citations: &[(Finite, "Z-overshoot of X below 0 before b: Z_a(x,theta) - W_{q+r}(x) Z_a(b,theta)/W_{q+r}(b)")],
        formula: lemma_z_overshoot,
    },
    IdentitySpec {
        id: "lemma.Z_overshoot_reflected",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-(q+r) tau~_{0,b}-} Z(Ybar^b(tau~_{0,b}-) - a, theta)]",
        citations: &[(
            Finite,
            "Z-overshoot of X reflected at b below 0: Z_a(x,theta) - W_{q+r}(x) Z_a'(b,theta)/W_{q+r}'(b+)",
        )],
        formula: lemma_z_overshoot_reflected,
    },
    IdentitySpec {
        id: "lemma.HX",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q e_r}; e_r < tau_0- ^ tau_b+] + E_x[e^{-(q+r) tau_0-} W(X(tau_0-) - a)/W(-a); tau_0- < tau_b+]",
        citations: &[(Finite, "first observation or W-overshoot of X on [0,b]: I_a(x) - W_{q+r}(x) I_a(b)/W_{q+r}(b)")],
        formula: lemma_hx,
    },
    IdentitySpec {
        id: "lemma.X_at_er",
        needs: Parisian,
        modes: &[Finite],
        meaning: DiscountedExpectation,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q e_r} X(e_r); e_r < tau_b+ ^ tau_0-]",
        citations: &[(Finite, "position of X at the first observation on [0,b]: r(W2_{q+r}(b) W_{q+r}(x)/W_{q+r}(b) - W2_{q+r}(x))")],
        formula: lemma_x_at_er,
    },
    IdentitySpec {
        id: "xr.dividends",
        needs: Parisian,
        modes: &[Finite, AInf, BInf, Perpetual],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{tau_b+(r) ^ tau_a-(r)} e^{-qt} dL_r(t)] for X_r",
        citations: &[
            (Finite, "periodic dividends of X_r on [a,b]: r(W2_{q+r}(b) I_a(x)/I_a(b) - W2_{q+r}(x))"),
            (AInf, "periodic dividends of X_r until tau_b+: r(W2_{q+r}(b) I_inf(x)/I_inf(b) - W2_{q+r}(x))"),
            (
                BInf,
                "periodic dividends of X_r until tau_a-: r(I_a(x) W(-a)/(Phi(q+r) Z'(-a,Phi(q+r))) - W2_{q+r}(x))",
            ),
            (
                Perpetual,
                "perpetual periodic dividends of X_r: (Phi(q+r)-Phi(q))/(Phi(q+r)Phi(q)) I_inf(x) - r W2_{q+r}(x); \
                 infinite unless q > 0 or psi'(0+) < 0",
            ),
        ],
        formula: xr_dividends,
    },
    IdentitySpec {
        id: "xr.up",
        needs: Parisian,
        modes: &[Finite, AInf],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q tau_b+(r)}; tau_b+(r) < tau_a-(r)] for X_r",
        citations: &[
            (Finite, "up-crossing of X_r before a: I_a(x)/I_a(b)"),
            (AInf, "up-crossing of X_r: I_inf(x)/I_inf(b)"),
        ],
        formula: xr_up,
    },
    IdentitySpec {
        id: "xr.down",
        needs: Parisian,
        modes: &[Finite, BInf],
        meaning: LaplaceTransform,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-q tau_a-(r) - theta (a - X_r(tau_a-(r)))}; tau_a-(r) < tau_b+(r)] for X_r",
        citations: &[
            (Finite, "down-crossing and overshoot of X_r before b: J_a(x,theta) - I_a(x) J_a(b,theta)/I_a(b)"),
            (
                BInf,
                "down-crossing and overshoot of X_r: J_a(x,theta) - I_a(x)(Z~(-a,theta) - r Z(-a,theta)/Phi(q+r)) \
                 W(-a) Phi(q+r)/Z'(-a,Phi(q+r))",
            ),
        ],
        formula: xr_down,
    },
    IdentitySpec {
        id: "xr.creep",
        needs: Parisian,
        modes: &[Finite, BInf],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: true,
        description: "E_x[e^{-q tau_a-(r)}; X_r(tau_a-(r)) = a, tau_a-(r) < tau_b+(r)] for X_r",
        citations: &[
            (Finite, "creeping of X_r before b: C_a(x) - I_a(x) C_a(b)/I_a(b)"),
            (
                BInf,
                "creeping of X_r: C_a(x) - I_a(x) W(-a)(sigma^2/2)[Phi(q+r) - r W'(-a)/Z'(-a,Phi(q+r))]",
            ),
        ],
        formula: xr_creep,
    },
    IdentitySpec {
        id: "xr.overshoot",
        needs: Parisian,
        modes: &[Finite, BInf],
        meaning: ExpectedDiscountedOvershoot,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q tau_a-(r)} (a - X_r(tau_a-(r))); tau_a-(r) < tau_b+(r)] for X_r",
        citations: &[
            (Finite, "discounted overshoot of X_r before b: I_a(x) K_a(b)/I_a(b) - K_a(x)"),
            (
                BInf,
                "discounted overshoot of X_r: I_a(x) W(-a)/Z'(-a,Phi(q+r)) (Z~(-a) - psi'(0+) Z(-a,Phi(q+r))) - K_a(x)",
            ),
        ],
        formula: xr_overshoot,
    },
    IdentitySpec {
        id: "xtilde.div_periodic",
        needs: Parisian,
        modes: &[Finite, AInf],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{tau~_{a,b}-(r)} e^{-qt} dL~_{r,P}^b(t)] for X~_r^b",
        citations: &[
            (Finite, "periodic dividends of X~_r^b killed below a: r(W1_{q+r}(b) I_a(x)/I_a'(b+) - W2_{q+r}(x))"),
            (
                AInf,
                "perpetual periodic dividends of X~_r^b: r(W1_{q+r}(b) I_inf(x)/I_inf'(b) - W2_{q+r}(x)); \
                 infinite unless q > 0 or psi'(0+) < 0",
            ),
        ],
        formula: xtilde_div_periodic,
    },
    IdentitySpec {
        id: "xtilde.div_singular",
        needs: Parisian,
        modes: &[Finite, AInf],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{tau~_{a,b}-(r)} e^{-qt} dL~_{r,S}^b(t)] for X~_r^b",
        citations: &[
            (Finite, "singular dividends of X~_r^b killed below a: I_a(x)/I_a'(b+)"),
            (
                AInf,
                "perpetual singular dividends of X~_r^b: I_inf(x)/I_inf'(b); infinite unless q > 0 or psi'(0+) < 0",
            ),
        ],
        formula: xtilde_div_singular,
    },
    IdentitySpec {
        id: "xtilde.down",
        needs: Parisian,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: true,
        needs_sigma: false,
        description: "E_x[e^{-q tau~_{a,b}-(r) - theta (a - X~_r^b(tau~_{a,b}-(r)))}] for X~_r^b",
        citations: &[(Finite, "down-crossing and overshoot of X~_r^b: J_a(x,theta) - J_a'(b,theta) I_a(x)/I_a'(b+)")],
        formula: xtilde_down,
    },
    IdentitySpec {
        id: "xtilde.overshoot",
        needs: Parisian,
        modes: &[Finite],
        meaning: ExpectedDiscountedOvershoot,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q tau~_{a,b}-(r)} (a - X~_r^b(tau~_{a,b}-(r)))] for X~_r^b",
        citations: &[(Finite, "discounted overshoot of X~_r^b: I_a(x) K_a'(b)/I_a'(b+) - K_a(x)")],
        formula: xtilde_overshoot,
    },
    IdentitySpec {
        id: "yr.dividends",
        needs: Parisian,
        modes: &[Finite, BInf],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{eta_{a,b}+(r)} e^{-qt} dL_r^a(t)] for Y_r^a",
        citations: &[
            (Finite, "periodic dividends of Y_r^a killed above b: r(W2_{q+r}(b) J_a(x)/J_a(b) - W2_{q+r}(x))"),
            (
                BInf,
                "perpetual periodic dividends of Y_r^a: r(J_a(x)/(q Phi(q+r) Z(-a,Phi(q+r))) - W2_{q+r}(x)); \
                 infinite at q = 0",
            ),
        ],
        formula: yr_dividends,
    },
    IdentitySpec {
        id: "yr.injection",
        needs: Parisian,
        modes: &[Finite, BInf],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^{eta_{a,b}+(r)} e^{-qt} dR_r^a(t)] for Y_r^a",
        citations: &[
            (Finite, "capital injections of Y_r^a killed above b: H_a(b) J_a(x)/J_a(b) - H_a(x)"),
            (
                BInf,
                "perpetual capital injections of Y_r^a (q > 0): (r Z(-a)/(q Phi(q+r) Z(-a,Phi(q+r))) + 1/Phi(q+r)) \
                 (Z_a(x) - r Z(-a) W1_{q+r}(x)) + r Zbar(-a) W1_{q+r}(x) - (Zbar_a(x) + psi'(0+)/q)",
            ),
        ],
        formula: yr_injection,
    },
    IdentitySpec {
        id: "yr.up",
        needs: Parisian,
        modes: &[Finite],
        meaning: LaplaceTransform,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[e^{-q eta_{a,b}+(r)}] for Y_r^a",
        citations: &[(Finite, "up-crossing of Y_r^a: J_a(x)/J_a(b)")],
        formula: yr_up,
    },
    IdentitySpec {
        id: "ytilde.div_periodic",
        needs: Parisian,
        modes: &[Finite],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^inf e^{-qt} dL~_{r,P}^{a,b}(t)] for Y~_r^{a,b}",
        citations: &[(
            Finite,
            "periodic dividends of Y~_r^{a,b}: r(W1_{q+r}(b) J_a(x)/J_a'(b) - W2_{q+r}(x)); infinite at q = 0",
        )],
        formula: ytilde_div_periodic,
    },
    IdentitySpec {
        id: "ytilde.div_singular",
        needs: Parisian,
        modes: &[Finite],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^inf e^{-qt} dL~_{r,S}^{a,b}(t)] for Y~_r^{a,b}",
        citations: &[(Finite, "singular dividends of Y~_r^{a,b}: J_a(x)/J_a'(b); infinite at q = 0")],
        formula: ytilde_div_singular,
    },
    IdentitySpec {
        id: "ytilde.injection",
        needs: Parisian,
        modes: &[Finite],
        meaning: ExpectedNpv,
        uses_theta: false,
        needs_sigma: false,
        description: "E_x[int_0^inf e^{-qt} dR~_r^{a,b}(t)] for Y~_r^{a,b}",
        citations: &[(Finite, "capital injections of Y~_r^{a,b}: -H_a(x) + J_a(x) H_a'(b)/J_a'(b); infinite at q = 0")],
        formula: ytilde_injection,
    },
];

pub fn registry() -> &'static [IdentitySpec] {
    REGISTRY
}

pub fn ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.id).collect()
}

pub fn lookup(id: &str) -> Result<&'static IdentitySpec> {
    REGISTRY
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownIdentity { id: id.to_string(), valid: ids().join(", ") })
}

fn finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn validate(model: &LevyModel, spec: &IdentitySpec, mode: Mode, p: &Params) -> Result<()> {
    if !spec.supports(mode) {
        let valid: Vec<_> = spec.modes.iter().map(|m| m.as_str()).collect();
        return Err(Error::Precondition(format!(
            "{} has no {mode} form; available: {}",
            spec.id,
            valid.join(", ")
        )));
    }
    finite_nonneg("q", p.q)?;
    if !p.x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {}", p.x)));
    }
    if spec.uses_theta {
        finite_nonneg("theta", p.theta)?;
    }
    if spec.needs_sigma && model.sigma() == 0.0 {
        return Err(Error::Precondition(format!("{} needs sigma > 0: without a Gaussian part there is no creeping", spec.id)));
    }
    let (use_a, use_b) = (mode.uses_a(), mode.uses_b());
    if use_a && !p.a.is_finite() {
        return Err(Error::Domain(format!("a must be finite in {mode} mode, got {}", p.a)));
    }
    if use_b && !p.b.is_finite() {
        return Err(Error::Domain(format!("b must be finite in {mode} mode, got {}", p.b)));
    }
    match spec.needs {
        Needs::Classical => {
            if use_a && use_b && p.a >= p.b {
                return Err(Error::Domain(format!("need a < b, got a = {}, b = {}", p.a, p.b)));
            }
        }
        Needs::Parisian => {
            if !(p.r > 0.0 && p.r.is_finite()) {
                return Err(Error::Domain(format!("r must be finite and > 0, got {}", p.r)));
            }
            if use_a && p.a >= 0.0 {
                return Err(Error::Domain(format!("need a < 0, got {}", p.a)));
            }
            if use_b && p.b <= 0.0 {
                return Err(Error::Domain(format!("need b > 0, got {}", p.b)));
            }
        }
    }
    if use_b && p.x > p.b {
        return Err(Error::Domain(format!("need x <= b, got x = {}, b = {}", p.x, p.b)));
    }
    Ok(())
}

pub fn evaluate(model: &LevyModel, req: &IdentityRequest) -> Result<IdentityValue> {
    let spec = lookup(&req.id)?;
    evaluate_spec(model, spec, req.mode, &req.params)
}

/// Evaluate by id and mode without building a request.
pub fn evaluate_id(model: &LevyModel, id: &str, mode: Mode, params: &Params) -> Result<f64> {
    Ok(evaluate_spec(model, lookup(id)?, mode, params)?.value)
}

fn evaluate_spec(model: &LevyModel, spec: &'static IdentitySpec, mode: Mode, p: &Params) -> Result<IdentityValue> {
    validate(model, spec, mode, p)?;
    let (use_a, use_b) = (mode.uses_a(), mode.uses_b());
    let span = match (use_a, use_b) {
        (true, true) => p.b - p.a,
        (true, false) => p.x.abs() - p.a,
        (false, true) => p.b,
        (false, false) => p.x.abs(),
    };
    let x_max = (span.max(p.x.abs()) + 5.0).max(FALLBACK_X_MAX);
    let parisian = spec.needs == Needs::Parisian;
    let sq = ScaleFn::with_range(model, p.q, x_max)?;
    let (sqr, ks) = if parisian {
        if use_a {
            let ks = KernelSet::with_range(model, p.q, p.r, p.a, x_max)?;
            (Some(ks.scale_qr().clone()), Some(ks))
        } else {
            (Some(ScaleFn::with_range(model, p.q + p.r, x_max)?), None)
        }
    } else {
        (None, None)
    };
    let ctx = Ctx {
        model,
        mode,
        q: p.q,
        r: p.r,
        a: if use_a { p.a } else { f64::NEG_INFINITY },
        b: if use_b { p.b } else { f64::INFINITY },
        x: p.x,
        theta: if spec.uses_theta { p.theta } else { 0.0 },
        sq,
        sqr,
        ks,
    };
    let value = (spec.formula)(&ctx)?;
    if value.is_nan() {
        return Err(Error::Internal(format!("{} evaluated to NaN", spec.id)));
    }
    Ok(IdentityValue { value, meaning: spec.meaning, formula_citation: spec.citation(mode) })
}

/// Which barrier is sent to infinity in a limit pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    A,
    B,
}

/// A finite-parameter identity and the limiting identity it converges to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LimitPair {
    pub finite_id: &'static str,
    pub finite_mode: Mode,
    pub limit_id: &'static str,
    pub limit_mode: Mode,
    pub direction: Direction,
}

pub const A_SEQUENCE: [f64; 3] = [-5.0, -10.0, -20.0];
pub const B_SEQUENCE: [f64; 3] = [10.0, 20.0, 40.0];

const fn pair(finite_id: &'static str, finite_mode: Mode, limit_id: &'static str, limit_mode: Mode, direction: Direction) -> LimitPair {
    LimitPair { finite_id, finite_mode, limit_id, limit_mode, direction }
}

static LIMIT_PAIRS: &[LimitPair] = &[
    pair("classic.down", Finite, "classic.down.inf", BInf, Direction::B),
    pair("classic.creep.two_sided", Finite, "classic.creep", BInf, Direction::B),
    pair("xr.dividends", Finite, "xr.dividends", AInf, Direction::A),
    pair("xr.dividends", Finite, "xr.dividends", BInf, Direction::B),
    pair("xr.dividends", AInf, "xr.dividends", Perpetual, Direction::B),
    pair("xr.dividends", BInf, "xr.dividends", Perpetual, Direction::A),
    pair("xr.up", Finite, "xr.up", AInf, Direction::A),
    pair("xr.down", Finite, "xr.down", BInf, Direction::B),
    pair("xr.creep", Finite, "xr.creep", BInf, Direction::B),
    pair("xr.overshoot", Finite, "xr.overshoot", BInf, Direction::B),
    pair("xtilde.div_periodic", Finite, "xtilde.div_periodic", AInf, Direction::A),
    pair("xtilde.div_singular", Finite, "xtilde.div_singular", AInf, Direction::A),
    pair("yr.dividends", Finite, "yr.dividends", BInf, Direction::B),
    pair("yr.injection", Finite, "yr.injection", BInf, Direction::B),
];

pub fn limit_pairs() -> &'static [LimitPair] {
    LIMIT_PAIRS
}

/// Deviations at or below this level are treated as exact agreement.
pub const DEVIATION_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitReport {
    pub pair: LimitPair,
    pub sequence: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    /// |value − limit| relative to |limit| when |limit| ≥ 1, absolute otherwise.
    pub deviations: Vec<f64>,
    /// Successive deviation ratios; 0 when both sit at the noise floor.
    pub ratios: Vec<f64>,
    pub final_deviation: f64,
    pub monotone: bool,
}

impl LimitReport {
    pub fn passes(&self, max_final: f64, max_ratio: f64) -> bool {
        self.final_deviation <= max_final && self.ratios.iter().all(|&r| r <= max_ratio)
    }
}

/// Evaluate the finite side of `pair` along `sequence` (values of a or b) and
/// compare with the limiting side at the same remaining parameters.
pub fn evaluate_limit_consistency(model: &LevyModel, pair: &LimitPair, params: &Params, sequence: &[f64]) -> Result<LimitReport> {
    let mut lp = *params;
    match pair.direction {
        Direction::A => lp.a = f64::NEG_INFINITY,
        Direction::B => lp.b = f64::INFINITY,
    }
    let limit = evaluate_id(model, pair.limit_id, pair.limit_mode, &lp)?;
    let scale = if limit.abs() >= 1.0 { limit.abs() } else { 1.0 };
    let mut values = Vec::with_capacity(sequence.len());
    for &s in sequence {
        let mut fp = *params;
        match pair.direction {
            Direction::A => fp.a = s,
            Direction::B => fp.b = s,
        }
        values.push(evaluate_id(model, pair.finite_id, pair.finite_mode, &fp)?);
    }
    let deviations: Vec<f64> = values.iter().map(|v| (v - limit).abs() / scale).collect();
    let ratios = deviations
        .windows(2)
        .map(|w| if w[1] <= DEVIATION_FLOOR { 0.0 } else { w[1] / w[0] })
        .collect();
    let monotone = deviations.windows(2).all(|w| w[1] <= w[0] || w[1] <= DEVIATION_FLOOR);
    Ok(LimitReport {
        pair: *pair,
        sequence: sequence.to_vec(),
        values,
        limit,
        final_deviation: deviations.last().copied().unwrap_or(0.0),
        deviations,
        ratios,
        monotone,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    A,
    B,
    X,
    R,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(SweepParam::A),
            "b" => Ok(SweepParam::B),
            "x" => Ok(SweepParam::X),
            "r" => Ok(SweepParam::R),
            _ => Err(Error::Config(format!("unknown sweep parameter `{s}`; expected a, b, x or r"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::A => "a",
            SweepParam::B => "b",
            SweepParam::X => "x",
            SweepParam::R => "r",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    /// The identity value, or the error message at this point.
    pub value: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub id: String,
    pub mode: Mode,
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    /// Row index of the largest finite value, for NPV identities.
    pub argmax: Option<usize>,
}

/// Evaluate `id` at `steps` equally spaced values of one parameter in [from, to].
#[allow(clippy::too_many_arguments)]
pub fn barrier_sweep(
    model: &LevyModel,
    id: &str,
    mode: Mode,
    params: &Params,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<SweepTable> {
    let spec = lookup(id)?;
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Error::Config(format!("need steps >= 1 and a finite range, got {steps} over [{from}, {to}]")));
    }
    let rows: Vec<SweepRow> = (0..steps)
        .map(|i| {
            let v = if steps == 1 { from } else { from + (to - from) * i as f64 / (steps - 1) as f64 };
            let mut p = *params;
            match param {
                SweepParam::A => p.a = v,
                SweepParam::B => p.b = v,
                SweepParam::X => p.x = v,
                SweepParam::R => p.r = v,
            }
            let value = evaluate_spec(model, spec, mode, &p).map(|iv| iv.value).map_err(|e| e.to_string());
            SweepRow { param: v, value }
        })
        .collect();
    let argmax = if spec.meaning.is_npv() {
        rows.iter()
            .enumerate()
            .filter_map(|(i, r)| r.value.as_ref().ok().filter(|v| v.is_finite()).map(|v| (i, *v)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    } else {
        None
    };
    Ok(SweepTable { id: id.to_string(), mode, param, rows, argmax })
}

/// Classical identities that the Parisian ones reduce to as r → 0.
pub mod classical {
    use super::*;

    /// Down-crossing with overshoot of X reflected above at b.
    pub fn reflected_above_down(model: &LevyModel, q: f64, a: f64, b: f64, x: f64, theta: f64) -> Result<f64> {
        let s = ScaleFn::with_range(model, q, (b - a + 5.0).max(FALLBACK_X_MAX))?;
        let (y, l) = (x - a, b - a);
        Ok(s.z_theta(y, theta)? - s.z_theta_prime(l, theta)? * s.w(y)? / s.w_prime(l)?)
    }

    /// Two-sided discounted overshoot below a of X.
    pub fn two_sided_overshoot(model: &LevyModel, q: f64, a: f64, b: f64, x: f64) -> Result<f64> {
        let s = ScaleFn::with_range(model, q, (b - a + 5.0).max(FALLBACK_X_MAX))?;
        let (y, l) = (x - a, b - a);
        Ok(s.w(y)? / s.w(l)? * s.l(l)? - s.l(y)?)
    }

    /// Discounted overshoot below a of X reflected above at b.
    pub fn reflected_above_overshoot(model: &LevyModel, q: f64, a: f64, b: f64, x: f64) -> Result<f64> {
        let s = ScaleFn::with_range(model, q, (b - a + 5.0).max(FALLBACK_X_MAX))?;
        let (y, l) = (x - a, b - a);
        Ok(s.w(y)? / s.w_prime(l)? * s.l_prime(l)? - s.l(y)?)
    }

    /// Barrier dividends at b of X doubly reflected at a and b (q > 0).
    pub fn doubly_reflected_dividends(model: &LevyModel, q: f64, a: f64, b: f64, x: f64) -> Result<f64> {
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let s = ScaleFn::with_range(model, q, (b - a + 5.0).max(FALLBACK_X_MAX))?;
        Ok(s.z(x - a)? / (q * s.w(b - a)?))
    }

    /// Capital injections at a of X doubly reflected at a and b (q > 0).
    pub fn doubly_reflected_injection(model: &LevyModel, q: f64, a: f64, b: f64, x: f64) -> Result<f64> {
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let s = ScaleFn::with_range(model, q, (b - a + 5.0).max(FALLBACK_X_MAX))?;
        let (y, l) = (x - a, b - a);
        Ok(-s.z_bar(y)? - model.psi_prime_real(0.0) / q + s.z(y)? * s.z(l)? / (q * s.w(l)?))
    }
}

/// What a Parisian identity becomes as r → 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Counterpart {
    /// A classical value, labelled by the classical identity it comes from.
    Value { label: &'static str, value: f64 },
    /// The Parisian quantity vanishes (periodic dividends).
    Vanishes,
}

/// The classical counterpart of a finite-mode Parisian identity, if it has one.
pub fn classical_counterpart(model: &LevyModel, id: &str, params: &Params) -> Result<Option<Counterpart>> {
    let p = *params;
    let classic = |cid: &'static str| -> Result<Option<Counterpart>> {
        Ok(Some(Counterpart::Value { label: cid, value: evaluate_id(model, cid, Mode::Finite, &p)? }))
    };
    match id {
        "xr.dividends" | "xtilde.div_periodic" | "yr.dividends" | "ytilde.div_periodic" => Ok(Some(Counterpart::Vanishes)),
        "xr.up" => classic("classic.up"),
        "xr.down" => classic("classic.down"),
        "xr.creep" => classic("classic.creep.two_sided"),
        "xtilde.div_singular" => classic("refl_above.dividends"),
        "yr.up" => classic("refl_below.up_time"),
        "yr.injection" => classic("refl_below.injection"),
        "xr.overshoot" => Ok(Some(Counterpart::Value {
            label: "two-sided overshoot: W(x-a) l(b-a)/W(b-a) - l(x-a)",
            value: classical::two_sided_overshoot(model, p.q, p.a, p.b, p.x)?,
        })),
        "xtilde.down" => Ok(Some(Counterpart::Value {
            label: "reflected-above down-crossing: Z(x-a,theta) - Z'(b-a,theta) W(x-a)/W'((b-a)+)",
            value: classical::reflected_above_down(model, p.q, p.a, p.b, p.x, p.theta)?,
        })),
        "xtilde.overshoot" => Ok(Some(Counterpart::Value {
            label: "reflected-above overshoot: W(x-a) l'(b-a)/W'((b-a)+) - l(x-a)",
            value: classical::reflected_above_overshoot(model, p.q, p.a, p.b, p.x)?,
        })),
        "ytilde.div_singular" => Ok(Some(Counterpart::Value {
            label: "doubly reflected dividends: Z(x-a)/(q W(b-a))",
            value: classical::doubly_reflected_dividends(model, p.q, p.a, p.b, p.x)?,
        })),
        "ytilde.injection" => Ok(Some(Counterpart::Value {
            label: "doubly reflected injections: -Zbar(x-a) - psi'(0+)/q + Z(x-a) Z(b-a)/(q W(b-a))",
            value: classical::doubly_reflected_injection(model, p.q, p.a, p.b, p.x)?,
        })),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::Phase;

    fn bm() -> LevyModel {
        LevyModel::brownian(0.2, 1.0).unwrap()
    }

    fn cl() -> LevyModel {
        LevyModel::cramer_lundberg(1.5, 1.0, vec![Phase { alpha: 1.0, weight: 1.0 }]).unwrap()
    }

    fn canonical() -> Params {
        Params { q: 0.05, r: 1.0, a: -2.0, b: 3.0, x: 0.5, theta: 0.5 }
    }

    #[test]
    fn registry_ids_are_unique_and_cited() {
        let ids = ids();
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        for s in registry() {
            for &m in s.modes {
                assert!(!s.citation(m).is_empty(), "{} {m}", s.id);
            }
        }
        assert!(matches!(lookup("nope"), Err(Error::UnknownIdentity { .. })));
    }

    #[test]
    fn simple_exact_values() {
        for m in [bm(), cl()] {
            let mut p = canonical();
            p.x = p.b;
            assert!((evaluate_id(&m, "xr.up", Mode::Finite, &p).unwrap() - 1.0).abs() < 1e-15);
            assert!(evaluate_id(&m, "xr.dividends", Mode::Finite, &p).unwrap().abs() < 1e-12);
            let mut p = canonical();
            p.q = 0.0;
            let up = evaluate_id(&m, "xr.up", Mode::Finite, &p).unwrap();
            p.theta = 0.0;
            let down = evaluate_id(&m, "xr.down", Mode::Finite, &p).unwrap();
            assert!((up + down - 1.0).abs() < 1e-10);
            assert!((evaluate_id(&m, "yr.up", Mode::Finite, &p).unwrap() - 1.0).abs() < 1e-10);
            assert_eq!(evaluate_id(&m, "ytilde.injection", Mode::Finite, &p).unwrap(), f64::INFINITY);
            assert_eq!(evaluate_id(&m, "yr.dividends", Mode::BInf, &p).unwrap(), f64::INFINITY);
            assert!(matches!(evaluate_id(&m, "yr.injection", Mode::BInf, &p), Err(Error::Precondition(_))));
        }
    }

    #[test]
    fn fixed_points_at_zero() {
        for m in [bm(), cl()] {
            let mut p = canonical();
            p.x = 0.0;
            let ks = KernelSet::new(&m, p.q, p.r, p.a).unwrap();
            let v = evaluate_id(&m, "xtilde.div_periodic", Mode::Finite, &p).unwrap();
            let expect = p.r * ks.scale_qr().w_bar(p.b).unwrap() / ks.i_prime(p.b).unwrap();
            assert!((v - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn preconditions_and_domains() {
        let p = canonical();
        assert!(matches!(evaluate_id(&cl(), "xr.creep", Mode::Finite, &p), Err(Error::Precondition(_))));
        let mut bad = p;
        bad.x = 4.0;
        assert!(matches!(evaluate_id(&bm(), "xr.up", Mode::Finite, &bad), Err(Error::Domain(_))));
        assert!(matches!(evaluate_id(&bm(), "xr.up", Mode::BInf, &p), Err(Error::Precondition(_))));
        let mut p0 = p;
        p0.r = 0.0;
        assert!(matches!(evaluate_id(&bm(), "xr.up", Mode::Finite, &p0), Err(Error::Domain(_))));
    }

    #[test]
    fn sweep_flags_argmax_and_marks_errors() {
        let t = barrier_sweep(&bm(), "xr.dividends", Mode::Finite, &canonical(), SweepParam::B, 0.5, 5.0, 10).unwrap();
        assert_eq!(t.rows.len(), 10);
        assert!(t.argmax.is_some());
        let t = barrier_sweep(&bm(), "xr.up", Mode::Finite, &canonical(), SweepParam::X, 2.0, 4.0, 3).unwrap();
        assert!(t.rows[2].value.is_err());
        assert!(t.argmax.is_none());
    }
}
