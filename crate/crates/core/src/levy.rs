//! Spectrally negative Lévy models with hyperexponential jumps: the Laplace
//! exponent ψ, its derivative and divided differences, the right inverse Φ
//! and the full real root set of ψ(θ) = q used by the partial-fraction scale
//! functions.
//!
//! ψ(θ) = cθ + σ²θ²/2 + λ Σ p_i (α_i/(α_i+θ) − 1), where c is the drift of the
//! bounded-variation representation. The Lévy–Khintchine coefficient γ is
//! related by c = γ − ∫_{(−1,0)} x Π(dx).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bracketed_root;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(alias = "brownian_motion", alias = "bm")]
    BrownianMotion,
    #[serde(alias = "cramer_lundberg", alias = "cl")]
    CramerLundberg,
    #[serde(alias = "jump_diffusion", alias = "jd")]
    JumpDiffusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VariationClass {
    BoundedVariation,
    UnboundedVariation,
}

/// One exponential component of the (negated) jump size law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub alpha: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jumps {
    pub lambda: f64,
    pub phases: Vec<Phase>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevyModel {
    kind: ModelKind,
    gamma: f64,
    drift: f64,
    sigma: f64,
    jumps: Option<Jumps>,
    /// Phases with equal rates merged, sorted by increasing alpha.
    #[serde(skip)]
    merged: Vec<Phase>,
}

/// Real roots of ψ(θ) = q, all simple, with the partial-fraction weights
/// 1/ψ′(θ_k). `None` when two roots (nearly) coincide.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<f64>,
    pub weights: Vec<f64>,
}

/// ∫_{(−1,0)} |x| Π(dx) for exponential phases, i.e. −∫_{(−1,0)} x Π(dx).
fn small_jump_mean(lambda: f64, phases: &[Phase]) -> f64 {
    lambda
        * phases
            .iter()
            .map(|p| p.weight * (-(-p.alpha).exp_m1() - p.alpha * (-p.alpha).exp()) / p.alpha)
            .sum::<f64>()
}

impl LevyModel {
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        Self::from_drift(ModelKind::BrownianMotion, mu, sigma, None)
    }

    pub fn cramer_lundberg(c: f64, lambda: f64, phases: Vec<Phase>) -> Result<Self> {
        Self::from_drift(ModelKind::CramerLundberg, c, 0.0, Some(Jumps { lambda, phases }))
    }

    pub fn jump_diffusion(c: f64, sigma: f64, lambda: f64, phases: Vec<Phase>) -> Result<Self> {
        Self::from_drift(ModelKind::JumpDiffusion, c, sigma, Some(Jumps { lambda, phases }))
    }

    /// Build from the Lévy–Khintchine coefficient γ.
    pub fn from_gamma(kind: ModelKind, gamma: f64, sigma: f64, jumps: Option<Jumps>) -> Result<Self> {
        let shift = jumps.as_ref().map_or(0.0, |j| small_jump_mean(j.lambda, &j.phases));
        let mut m = Self::from_drift(kind, gamma + shift, sigma, jumps)?;
        m.gamma = gamma;
        Ok(m)
    }

    /// Build from the drift c of the representation ψ(θ) = cθ + σ²θ²/2 − ∫(1 − e^{θx})Π(dx).
    pub fn from_drift(kind: ModelKind, drift: f64, sigma: f64, jumps: Option<Jumps>) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::InvalidModel("drift must be finite".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidModel(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        match kind {
            ModelKind::BrownianMotion => {
                if jumps.is_some() {
                    return Err(Error::InvalidModel("BrownianMotion takes no jumps".into()));
                }
                if sigma <= 0.0 {
                    return Err(Error::InvalidModel("BrownianMotion needs sigma > 0".into()));
                }
            }
            ModelKind::CramerLundberg => {
                if sigma != 0.0 {
                    return Err(Error::InvalidModel("CramerLundberg needs sigma = 0".into()));
                }
                if drift <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "CramerLundberg needs drift c > 0 (otherwise a negative subordinator), got {drift}"
                    )));
                }
            }
            ModelKind::JumpDiffusion => {
                if sigma <= 0.0 {
                    return Err(Error::InvalidModel("JumpDiffusion needs sigma > 0".into()));
                }
            }
        }
        let mut merged: Vec<Phase> = Vec::new();
        if let Some(j) = &jumps {
            if !(j.lambda.is_finite() && j.lambda > 0.0) {
                return Err(Error::InvalidModel(format!("lambda must be > 0, got {}", j.lambda)));
            }
            if j.phases.is_empty() {
                return Err(Error::InvalidModel("at least one jump phase is required".into()));
            }
            let mut total = 0.0;
            for p in &j.phases {
                if !(p.alpha.is_finite() && p.alpha > 0.0) {
                    return Err(Error::InvalidModel(format!("phase alpha must be > 0, got {}", p.alpha)));
                }
                if !(p.weight.is_finite() && p.weight >= 0.0) {
                    return Err(Error::InvalidModel(format!("phase weight must be >= 0, got {}", p.weight)));
                }
                total += p.weight;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!("phase weights must sum to 1, got {total}")));
            }
            let mut sorted: Vec<Phase> = j.phases.iter().copied().filter(|p| p.weight > 0.0).collect();
            sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
            for p in sorted {
                match merged.last_mut() {
                    Some(last) if last.alpha == p.alpha => last.weight += p.weight,
                    _ => merged.push(p),
                }
            }
        } else if kind != ModelKind::BrownianMotion {
            return Err(Error::InvalidModel(format!("{kind:?} needs a jump specification")));
        }
        let shift = jumps.as_ref().map_or(0.0, |j| small_jump_mean(j.lambda, &j.phases));
        Ok(Self { kind, gamma: drift - shift, drift, sigma, jumps, merged })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Lévy–Khintchine linear coefficient γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Drift c of the representation without small-jump compensation.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn jumps(&self) -> Option<&Jumps> {
        self.jumps.as_ref()
    }

    pub fn lambda(&self) -> f64 {
        self.jumps.as_ref().map_or(0.0, |j| j.lambda)
    }

    /// Jump phases with equal rates merged, ordered by increasing rate.
    pub fn merged_phases(&self) -> &[Phase] {
        &self.merged
    }

    pub fn classify_variation(&self) -> VariationClass {
        // Exponential phases always integrate |x| near 0.
        if self.sigma == 0.0 {
            VariationClass::BoundedVariation
        } else {
            VariationClass::UnboundedVariation
        }
    }

    /// ψ on the real line away from the poles −α_i.
    pub fn psi_real(&self, theta: f64) -> f64 {
        let lambda = self.lambda();
        let jump: f64 = self.merged.iter().map(|p| p.weight * (p.alpha / (p.alpha + theta) - 1.0)).sum();
        self.drift * theta + 0.5 * self.sigma * self.sigma * theta * theta + lambda * jump
    }

    /// ψ′ on the real line away from the poles.
    pub fn psi_prime_real(&self, theta: f64) -> f64 {
        self.psi_dd(theta, theta)
    }

    /// Divided difference (ψ(u) − ψ(v))/(u − v), evaluated without cancellation;
    /// equals ψ′(u) when u = v.
    pub fn psi_dd(&self, u: f64, v: f64) -> f64 {
        let lambda = self.lambda();
        let jump: f64 = self
            .merged
            .iter()
            .map(|p| p.weight * p.alpha / ((p.alpha + u) * (p.alpha + v)))
            .sum();
        self.drift + 0.5 * self.sigma * self.sigma * (u + v) - lambda * jump
    }

    pub fn psi(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!("psi needs theta >= 0, got {theta}")));
        }
        Ok(self.psi_real(theta))
    }

    /// ψ′(θ); at θ = 0 this is ψ′(0+).
    pub fn psi_prime(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!("psi_prime needs theta >= 0, got {theta}")));
        }
        Ok(self.psi_prime_real(theta))
    }

    pub fn psi_complex(&self, s: Complex64) -> Complex64 {
        let lambda = self.lambda();
        let mut jump = Complex64::new(0.0, 0.0);
        for p in &self.merged {
            jump += p.weight * (p.alpha / (s + p.alpha) - 1.0);
        }
        self.drift * s + 0.5 * self.sigma * self.sigma * s * s + lambda * jump
    }

    /// g(θ) = ψ(θ)/θ, increasing on (−α_1, ∞).
    fn psi_over_theta(&self, theta: f64) -> (f64, f64) {
        let lambda = self.lambda();
        let s2 = self.sigma * self.sigma;
        let mut g = self.drift + 0.5 * s2 * theta;
        let mut dg = 0.5 * s2;
        for p in &self.merged {
            let d = p.alpha + theta;
            g -= lambda * p.weight / d;
            dg += lambda * p.weight / (d * d);
        }
        (g, dg)
    }

    /// The nonzero root of ψ on (−α_1, ∞) (or the real line without jumps);
    /// `None` when ψ′(0+) = 0 so that 0 is a double root.
    fn secondary_zero_root(&self) -> Option<f64> {
        let (g0, _) = self.psi_over_theta(0.0);
        if g0 == 0.0 {
            return None;
        }
        let f = |t: f64| self.psi_over_theta(t);
        if g0 < 0.0 {
            // root in (0, ∞)
            let mut hi = 1.0;
            while f(hi).0 <= 0.0 {
                hi *= 2.0;
            }
            Some(bracketed_root(f, 0.0, hi, false))
        } else {
            let lo_bound = self.merged.first().map(|p| -p.alpha);
            match lo_bound {
                Some(lo) => Some(bracketed_root(f, lo, 0.0, false)),
                None => {
                    let mut lo = -1.0;
                    while f(lo).0 >= 0.0 {
                        lo *= 2.0;
                    }
                    Some(bracketed_root(f, lo, 0.0, false))
                }
            }
        }
    }

    /// Φ(0): the largest nonnegative root of ψ.
    pub fn phi0(&self) -> f64 {
        let root = self.secondary_zero_root().unwrap_or(0.0);
        let phi0 = root.max(0.0);
        debug_assert!(
            (self.psi_prime_real(0.0) >= 0.0) == (phi0 == 0.0),
            "phi0 inconsistent with the sign of psi'(0+)"
        );
        phi0
    }

    /// Φ(q) = sup{θ ≥ 0 : ψ(θ) = q}.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("phi needs finite q >= 0, got {q}")));
        }
        let phi0 = self.phi0();
        if q == 0.0 {
            return Ok(phi0);
        }
        let mut hi = (phi0 + 1.0).max(1.0);
        let mut grow = 0;
        while self.psi_real(hi) <= q {
            hi *= 2.0;
            grow += 1;
            if grow > 2000 {
                return Err(Error::Internal(format!("could not bracket phi({q})")));
            }
        }
        let f = |t: f64| (self.psi_real(t) - q, self.psi_prime_real(t));
        Ok(bracketed_root(f, phi0, hi, false))
    }

    /// W^{(q)}(0): 1/c in bounded variation, 0 otherwise.
    pub fn w_at_zero(&self) -> f64 {
        match self.classify_variation() {
            VariationClass::BoundedVariation => 1.0 / self.drift,
            VariationClass::UnboundedVariation => 0.0,
        }
    }

    /// W^{(q)′}(0+): 2/σ² when σ > 0, (q + λ)/c² for compound Poisson jumps with σ = 0.
    pub fn w_prime_at_zero(&self, q: f64) -> f64 {
        if self.sigma > 0.0 {
            2.0 / (self.sigma * self.sigma)
        } else {
            (q + self.lambda()) / (self.drift * self.drift)
        }
    }

    /// All real roots of ψ(θ) = q with partial-fraction weights, or `None`
    /// when the roots are not numerically simple.
    pub fn roots(&self, q: f64) -> Result<Option<RootSet>> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("q must be finite and >= 0, got {q}")));
        }
        let f = |t: f64| (self.psi_real(t) - q, self.psi_prime_real(t));
        let alphas: Vec<f64> = self.merged.iter().map(|p| p.alpha).collect();
        let mut roots = Vec::new();
        if q == 0.0 {
            roots.push(0.0);
            match self.secondary_zero_root() {
                Some(t) => roots.push(t),
                None => return Ok(None),
            }
        } else {
            roots.push(self.phi(q)?);
            match alphas.first() {
                Some(&a1) => roots.push(bracketed_root(f, -a1, 0.0, true)),
                None => {
                    let mut lo = -1.0;
                    while f(lo).0 <= 0.0 {
                        lo *= 2.0;
                    }
                    roots.push(bracketed_root(f, lo, 0.0, true));
                }
            }
        }
        for w in alphas.windows(2) {
            roots.push(bracketed_root(f, -w[1], -w[0], true));
        }
        if self.sigma > 0.0 {
            if let Some(&an) = alphas.last() {
                let mut step = 1.0;
                let mut lo = -an - step;
                while f(lo).0 <= 0.0 {
                    step *= 2.0;
                    lo = -an - step;
                }
                roots.push(bracketed_root(f, lo, -an, true));
            }
        }
        let expected = alphas.len() + if self.sigma > 0.0 { 2 } else { 1 };
        if roots.len() != expected {
            return Err(Error::Internal(format!("found {} roots, expected {expected}", roots.len())));
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        if roots.windows(2).any(|w| (w[0] - w[1]).abs() < 1e-7 * scale) {
            return Ok(None);
        }
        let weights = roots.iter().map(|&r| 1.0 / self.psi_prime_real(r)).collect();
        Ok(Some(RootSet { roots, weights }))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: ModelKind,
    gamma: Option<f64>,
    drift: Option<f64>,
    sigma: Option<f64>,
    lambda: Option<f64>,
    #[serde(default)]
    phase: Vec<Phase>,
}

impl LevyModel {
    /// Parse a model document. Keys: `kind`, exactly one of `gamma` or `drift`,
    /// `sigma`, `lambda` and repeated `[[phase]]` tables with `alpha`, `weight`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
        let sigma = file.sigma.unwrap_or(0.0);
        let jumps = match (file.lambda, file.phase.is_empty()) {
            (None, true) => None,
            (Some(lambda), false) => Some(Jumps { lambda, phases: file.phase }),
            (Some(_), true) => return Err(Error::ModelFile("`lambda` given without any [[phase]]".into())),
            (None, false) => return Err(Error::ModelFile("[[phase]] given without `lambda`".into())),
        };
        match (file.gamma, file.drift) {
            (Some(g), None) => Self::from_gamma(file.kind, g, sigma, jumps),
            (None, Some(c)) => Self::from_drift(file.kind, c, sigma, jumps),
            _ => Err(Error::ModelFile("exactly one of `gamma` or `drift` is required".into())),
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::ModelFile(m) => Error::ModelFile(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Serialize as a model document; floats use the shortest round-trip form.
    pub fn to_toml_string(&self) -> String {
        let mut s = format!("kind = \"{:?}\"\ngamma = {:?}\nsigma = {:?}\n", self.kind, self.gamma, self.sigma);
        if let Some(j) = &self.jumps {
            s.push_str(&format!("lambda = {:?}\n", j.lambda));
            for p in &j.phases {
                s.push_str(&format!("\n[[phase]]\nalpha = {:?}\nweight = {:?}\n", p.alpha, p.weight));
            }
        }
        s
    }
}
