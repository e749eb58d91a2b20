//! Monte Carlo construction of the controlled processes path by path.
//!
//! A path is driven by the model's drift c, Gaussian part σ and hyperexponential
//! jumps. Jump times and Poisson observation epochs are exact event times; the
//! Gaussian part moves on cells between them. With the bridge correction on,
//! each cell samples the Brownian-bridge extreme given its endpoints, which
//! makes killing and within-cell Skorokhod reflection exact per cell, and cells
//! grow away from the barriers. Without it, barriers are checked on a fixed
//! dt grid. For σ = 0 the path is piecewise linear and simulated exactly.
//!
//! Each path is recorded once as a [`PathOutcome`]; any number of functionals
//! are then averaged over the same outcomes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::scale::{ScaleFn, FALLBACK_X_MAX};

/// Largest cell used by the adaptive bridge scheme.
const MAX_CELL: f64 = 0.25;
/// Bridge crossing probabilities below this are not sampled.
const NEGLIGIBLE: f64 = 1e-14;
/// Truncation target e^{−q t_max} for perpetual functionals.
const DISCOUNT_TRUNCATION: f64 = 1e-6;
/// Horizon used when q = 0 and no horizon is given.
const UNDISCOUNTED_HORIZON: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Horizon cap; defaults to ln(1e6)/q for q > 0.
    pub t_max: Option<f64>,
    pub seed: u64,
    pub antithetic: bool,
    /// Brownian-bridge crossing correction between grid points.
    pub bridge: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, dt: 1e-3, t_max: None, seed: 1, antithetic: false, bridge: false }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be >= 1".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(Error::Config(format!("dt must lie in (0, 1e-2], got {}", self.dt)));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("t_max must be finite and > 0, got {t}")));
            }
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::Config("antithetic sampling needs an even n_paths".into()));
        }
        Ok(())
    }

    pub fn horizon(&self, q: f64) -> f64 {
        self.t_max.unwrap_or(if q > 0.0 { -DISCOUNT_TRUNCATION.ln() / q } else { UNDISCOUNTED_HORIZON })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Barrier {
    Open,
    Kill,
    Reflect,
}

/// Full description of one path law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSpec {
    pub x0: f64,
    pub lower: f64,
    pub lower_kind: Barrier,
    pub upper: f64,
    pub upper_kind: Barrier,
    /// Rate of the Poisson epochs at which a level above 0 is pushed to 0.
    pub parisian_rate: Option<f64>,
    /// Rate of an independent clock whose first epoch stops the path.
    pub clock_rate: Option<f64>,
    pub q: f64,
    pub t_max: f64,
}

/// The processes the identities are stated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    /// X killed on leaving [a, b].
    X,
    /// X reflected above at b, killed below a.
    XReflectedAbove,
    /// X reflected below at a, killed above b.
    XReflectedBelow,
    /// Parisian reflection at 0, killed on leaving [a, b].
    Xr,
    /// Parisian reflection at 0, classical reflection at b, killed below a.
    XtildeB,
    /// Parisian reflection at 0, classical reflection at a, killed above b.
    YrA,
    /// Parisian reflection at 0, classical reflection at a and b.
    YtildeAB,
    /// X killed on leaving [0, b], stopped at the first epoch of a rate-r clock.
    XObserved,
    /// X reflected above at b, killed below 0, stopped at the first rate-r epoch.
    YbarObserved,
}

impl Process {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::Config(format!(
                "unknown process `{s}`; expected x, x_reflected_above, x_reflected_below, xr, xtilde_b, yr_a, \
                 ytilde_ab, x_observed or ybar_observed"
            ))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub x: f64,
}

impl Process {
    fn uses_r(self) -> bool {
        !matches!(self, Process::X | Process::XReflectedAbove | Process::XReflectedBelow)
    }

    fn uses_a(self) -> bool {
        !matches!(self, Process::XObserved | Process::YbarObserved)
    }

    pub fn path_spec(self, p: &ProcessParams, q: f64, t_max: f64) -> Result<PathSpec> {
        use Barrier::*;
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Config(format!("q must be finite and >= 0, got {q}")));
        }
        if self.uses_r() && !(p.r > 0.0 && p.r.is_finite()) {
            return Err(Error::Config(format!("{self:?} needs a finite rate r > 0, got {}", p.r)));
        }
        if !(p.b.is_finite() && p.x.is_finite()) {
            return Err(Error::Config("b and x must be finite".into()));
        }
        let lower = if self.uses_a() { p.a } else { 0.0 };
        if !lower.is_finite() || lower >= p.b {
            return Err(Error::Config(format!("need a finite lower barrier below b, got {lower} and b = {}", p.b)));
        }
        if self.uses_r() && self.uses_a() && !(p.a < 0.0 && p.b > 0.0) {
            return Err(Error::Config(format!("{self:?} needs a < 0 < b, got a = {}, b = {}", p.a, p.b)));
        }
        if p.x > p.b || p.x < lower {
            return Err(Error::Config(format!("need {lower} <= x <= b = {}, got x = {}", p.b, p.x)));
        }
        let (lower_kind, upper_kind, parisian, clock) = match self {
            Process::X => (Kill, Kill, false, false),
            Process::XReflectedAbove => (Kill, Reflect, false, false),
            Process::XReflectedBelow => (Reflect, Kill, false, false),
            Process::Xr => (Kill, Kill, true, false),
            Process::XtildeB => (Kill, Reflect, true, false),
            Process::YrA => (Reflect, Kill, true, false),
            Process::YtildeAB => (Reflect, Reflect, true, false),
            Process::XObserved => (Kill, Kill, false, true),
            Process::YbarObserved => (Kill, Reflect, false, true),
        };
        Ok(PathSpec {
            x0: p.x,
            lower,
            lower_kind,
            upper: p.b,
            upper_kind,
            parisian_rate: parisian.then_some(p.r),
            clock_rate: clock.then_some(p.r),
            q,
            t_max,
        })
    }

    /// Whether reaching the horizon is the intended end of a path.
    pub fn is_perpetual(self) -> bool {
        matches!(self, Process::YtildeAB)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exit {
    Up,
    Down,
    Observed,
    Horizon,
}

/// Everything a functional may need from one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    pub exit: Exit,
    pub time: f64,
    /// Level at the exit, observation or horizon.
    pub level: f64,
    /// Down exit by continuous passage rather than a jump.
    pub creep: bool,
    /// Discounted Parisian pushes.
    pub periodic: f64,
    /// Discounted regulation at the upper reflecting barrier.
    pub singular: f64,
    /// Discounted regulation at the lower reflecting barrier.
    pub injections: f64,
    /// Number of Parisian pushes that moved the level.
    pub pushes: u32,
}

impl PathOutcome {
    fn discount(&self, q: f64) -> f64 {
        (-q * self.time).exp()
    }
}

fn discounted_integral(q: f64, t1: f64, t2: f64) -> f64 {
    if q == 0.0 {
        t2 - t1
    } else {
        ((-q * t1).exp() - (-q * t2).exp()) / q
    }
}

struct Engine<'a> {
    spec: &'a PathSpec,
    c: f64,
    sigma: f64,
    lambda: f64,
    /// Cumulative phase weights and rates of the jump law.
    cum_weights: Vec<f64>,
    alphas: Vec<f64>,
    dt: f64,
    bridge: bool,
}

struct State {
    t: f64,
    x: f64,
    periodic: f64,
    singular: f64,
    injections: f64,
    pushes: u32,
}

impl State {
    fn finish(&self, exit: Exit, time: f64, level: f64, creep: bool) -> PathOutcome {
        PathOutcome {
            exit,
            time,
            level,
            creep,
            periodic: self.periodic,
            singular: self.singular,
            injections: self.injections,
            pushes: self.pushes,
        }
    }
}

impl<'a> Engine<'a> {
    fn new(model: &LevyModel, spec: &'a PathSpec, cfg: &SimConfig) -> Self {
        let phases = model.merged_phases();
        let mut acc = 0.0;
        let cum_weights = phases
            .iter()
            .map(|p| {
                acc += p.weight;
                acc
            })
            .collect();
        Self {
            spec,
            c: model.drift(),
            sigma: model.sigma(),
            lambda: model.lambda(),
            cum_weights,
            alphas: phases.iter().map(|p| p.alpha).collect(),
            dt: cfg.dt,
            bridge: cfg.bridge,
        }
    }

    fn exp_time<R: Rng>(rng: &mut R, rate: f64) -> f64 {
        if rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / rate
        } else {
            f64::INFINITY
        }
    }

    fn jump_size<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = *self.cum_weights.last().unwrap_or(&1.0);
        let u: f64 = rng.random::<f64>() * total;
        let i = self.cum_weights.iter().position(|&w| u < w).unwrap_or(self.alphas.len() - 1);
        rng.sample::<f64, _>(Exp1) / self.alphas[i]
    }

    fn run<R: Rng>(&self, rng: &mut R, flip: f64) -> PathOutcome {
        let s = self.spec;
        let mut st = State { t: 0.0, x: s.x0, periodic: 0.0, singular: 0.0, injections: 0.0, pushes: 0 };
        if s.upper_kind == Barrier::Kill && s.x0 >= s.upper {
            return st.finish(Exit::Up, 0.0, s.x0, false);
        }
        if s.lower_kind == Barrier::Kill && (s.x0 < s.lower || (s.x0 == s.lower && self.sigma > 0.0)) {
            return st.finish(Exit::Down, 0.0, s.x0, s.x0 == s.lower);
        }
        let epoch_rate = s.parisian_rate.or(s.clock_rate).unwrap_or(0.0);
        let mut next_jump = Self::exp_time(rng, self.lambda);
        let mut next_epoch = Self::exp_time(rng, epoch_rate);
        loop {
            let t_event = next_jump.min(next_epoch).min(s.t_max);
            let moved = if self.sigma > 0.0 {
                self.diffuse(rng, &mut st, t_event, flip)
            } else {
                self.drift(&mut st, t_event)
            };
            if let Some(out) = moved {
                return out;
            }
            st.t = t_event;
            if t_event >= s.t_max {
                return st.finish(Exit::Horizon, s.t_max, st.x, false);
            }
            if next_jump <= next_epoch {
                st.x -= self.jump_size(rng);
                if st.x < s.lower {
                    match s.lower_kind {
                        Barrier::Kill => return st.finish(Exit::Down, st.t, st.x, false),
                        Barrier::Reflect => {
                            st.injections += (-s.q * st.t).exp() * (s.lower - st.x);
                            st.x = s.lower;
                        }
                        Barrier::Open => {}
                    }
                }
                next_jump += Self::exp_time(rng, self.lambda);
            } else {
                if s.clock_rate.is_some() {
                    return st.finish(Exit::Observed, st.t, st.x, false);
                }
                if st.x > 0.0 {
                    st.periodic += (-s.q * st.t).exp() * st.x;
                    st.pushes += 1;
                    st.x = 0.0;
                }
                next_epoch += Self::exp_time(rng, epoch_rate);
            }
        }
    }

    /// Exact linear motion (σ = 0) from st.t to t_end.
    fn drift(&self, st: &mut State, t_end: f64) -> Option<PathOutcome> {
        let s = self.spec;
        let span = t_end - st.t;
        if self.c > 0.0 && s.upper_kind != Barrier::Open {
            let t_hit = st.t + (s.upper - st.x).max(0.0) / self.c;
            if t_hit <= t_end {
                if s.upper_kind == Barrier::Kill {
                    return Some(st.finish(Exit::Up, t_hit, s.upper, false));
                }
                st.singular += self.c * discounted_integral(s.q, t_hit, t_end);
                st.x = s.upper;
                return None;
            }
        }
        if self.c < 0.0 && s.lower_kind != Barrier::Open {
            let t_hit = st.t + (st.x - s.lower).max(0.0) / -self.c;
            if t_hit <= t_end {
                if s.lower_kind == Barrier::Kill {
                    return Some(st.finish(Exit::Down, t_hit, s.lower, true));
                }
                st.injections += -self.c * discounted_integral(s.q, t_hit, t_end);
                st.x = s.lower;
                return None;
            }
        }
        st.x += self.c * span;
        None
    }

    fn cell_length(&self, x: f64) -> f64 {
        if !self.bridge {
            return self.dt;
        }
        let s = self.spec;
        let mut d = f64::INFINITY;
        if s.lower_kind != Barrier::Open {
            d = d.min(x - s.lower);
        }
        if s.upper_kind != Barrier::Open {
            d = d.min(s.upper - x);
        }
        (d * d / (16.0 * self.sigma * self.sigma)).clamp(self.dt, MAX_CELL)
    }

    /// Gaussian motion with drift from st.t to t_end, honouring the barriers.
    fn diffuse<R: Rng>(&self, rng: &mut R, st: &mut State, t_end: f64, flip: f64) -> Option<PathOutcome> {
        let s = self.spec;
        let s2 = self.sigma * self.sigma;
        while st.t < t_end {
            let h = self.cell_length(st.x).min(t_end - st.t);
            let z: f64 = rng.sample(StandardNormal);
            let x0 = st.x;
            let mut x1 = x0 + self.c * h + self.sigma * h.sqrt() * z * flip;
            let t_mid = st.t + 0.5 * h;
            // Upper barrier: the bridge maximum exceeds u with probability p.
            if s.upper_kind != Barrier::Open {
                let u = s.upper;
                let p = if x1 >= u { 1.0 } else if self.bridge { (-2.0 * (u - x0) * (u - x1) / (s2 * h)).exp() } else { 0.0 };
                if p > NEGLIGIBLE {
                    let v: f64 = if p < 1.0 { 1.0 - rng.random::<f64>() } else { 0.0 };
                    if v < p {
                        match s.upper_kind {
                            Barrier::Kill => {
                                let t_hit = if self.bridge { t_mid } else { st.t + h };
                                return Some(st.finish(Exit::Up, t_hit, u, false));
                            }
                            _ => {
                                let m = if self.bridge {
                                    let v = if p < 1.0 { v } else { 1.0 - rng.random::<f64>() };
                                    0.5 * (x0 + x1 + ((x1 - x0).powi(2) - 2.0 * s2 * h * v.ln()).sqrt())
                                } else {
                                    x1
                                };
                                let excess = (m - u).max(0.0);
                                st.singular += (-s.q * t_mid).exp() * excess;
                                x1 -= excess;
                            }
                        }
                    }
                }
            }
            if s.lower_kind != Barrier::Open {
                let l = s.lower;
                let p = if x1 <= l { 1.0 } else if self.bridge { (-2.0 * (x0 - l) * (x1 - l) / (s2 * h)).exp() } else { 0.0 };
                if p > NEGLIGIBLE {
                    let v: f64 = if p < 1.0 { 1.0 - rng.random::<f64>() } else { 0.0 };
                    if v < p {
                        match s.lower_kind {
                            Barrier::Kill => {
                                let t_hit = if self.bridge { t_mid } else { st.t + h };
                                return Some(st.finish(Exit::Down, t_hit, l, true));
                            }
                            _ => {
                                let m = if self.bridge {
                                    let v = if p < 1.0 { v } else { 1.0 - rng.random::<f64>() };
                                    0.5 * (x0 + x1 - ((x1 - x0).powi(2) - 2.0 * s2 * h * v.ln()).sqrt())
                                } else {
                                    x1
                                };
                                let deficit = (l - m).max(0.0);
                                st.injections += (-s.q * t_mid).exp() * deficit;
                                x1 += deficit;
                            }
                        }
                    }
                }
            }
            st.x = x1;
            st.t += h;
        }
        st.t = t_end;
        None
    }
}

/// Simulate `cfg.n_paths` independent outcomes. Path i uses stream i of a
/// ChaCha8 generator keyed by the seed (stream i/2 under antithetic sampling,
/// the odd member negating the Gaussian draws), so the result does not depend
/// on the number of worker threads.
pub fn simulate_outcomes(model: &LevyModel, spec: &PathSpec, cfg: &SimConfig) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    if !(spec.t_max > 0.0 && spec.t_max.is_finite()) {
        return Err(Error::Config(format!("t_max must be finite and > 0, got {}", spec.t_max)));
    }
    let engine = Engine::new(model, spec, cfg);
    let outcomes = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, flip) = if cfg.antithetic { (i / 2, if i % 2 == 1 { -1.0 } else { 1.0 }) } else { (i, 1.0) };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream as u64);
            engine.run(&mut rng, flip)
        })
        .collect();
    Ok(outcomes)
}

/// Path functionals averaged by [`summarize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Functional {
    /// e^{−qτ} on an upward exit.
    UpExit,
    /// e^{−qτ − θ·(lower − level)} on a downward exit.
    DownExit { theta: f64 },
    /// e^{−qτ} on a downward exit by creeping.
    Creep,
    /// e^{−qτ}·(lower − level) on a downward exit.
    Overshoot,
    PeriodicDividends,
    SingularDividends,
    Injections,
    /// e^{−qτ}·W^{(q)}(level − a) on a downward exit.
    ScaleAtDown { a: f64 },
    /// e^{−qτ}·Z^{(q)}(level − a, θ) on a downward exit.
    ThetaScaleAtDown { a: f64, theta: f64 },
    /// e^{−qt} at an observation, or e^{−qτ}·W^{(q)}(level − a)/W^{(q)}(−a) on a downward exit.
    ObservedOrScaleAtDown { a: f64 },
    /// e^{−qt}·level at an observation.
    LevelAtObservation,
}

impl Functional {
    fn needs_scale(&self) -> Option<f64> {
        match *self {
            Functional::ScaleAtDown { a } | Functional::ObservedOrScaleAtDown { a } => Some(a),
            Functional::ThetaScaleAtDown { a, .. } => Some(a),
            _ => None,
        }
    }

    fn value(&self, o: &PathOutcome, q: f64, lower: f64, scale: Option<&ScaleFn>, w_neg_a: f64) -> Result<f64> {
        let down = o.exit == Exit::Down;
        let d = o.discount(q);
        let sc = || scale.ok_or_else(|| Error::Internal("scale function missing".into()));
        Ok(match *self {
            Functional::UpExit => if o.exit == Exit::Up { d } else { 0.0 },
            Functional::DownExit { theta } => if down { d * (-theta * (lower - o.level)).exp() } else { 0.0 },
            Functional::Creep => if down && o.creep { d } else { 0.0 },
            Functional::Overshoot => if down { d * (lower - o.level) } else { 0.0 },
            Functional::PeriodicDividends => o.periodic,
            Functional::SingularDividends => o.singular,
            Functional::Injections => o.injections,
            Functional::ScaleAtDown { a } => if down { d * sc()?.w(o.level - a)? } else { 0.0 },
            Functional::ThetaScaleAtDown { a, theta } => {
                if down { d * sc()?.z_theta(o.level - a, theta)? } else { 0.0 }
            }
            Functional::ObservedOrScaleAtDown { a } => match o.exit {
                Exit::Observed => d,
                Exit::Down => d * sc()?.w(o.level - a)? / w_neg_a,
                _ => 0.0,
            },
            Functional::LevelAtObservation => if o.exit == Exit::Observed { d * o.level } else { 0.0 },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub estimate: f64,
    pub stderr: f64,
    /// Number of independent samples (antithetic pairs count once).
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub bias_note: String,
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = pairwise_sum(samples) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Describe the discretization and flag horizon truncation.
pub fn bias_note(model: &LevyModel, spec: &PathSpec, cfg: &SimConfig, outcomes: &[PathOutcome], perpetual: bool) -> String {
    let mut note = if model.sigma() == 0.0 {
        "exact event-driven paths (sigma = 0)".to_string()
    } else if cfg.bridge {
        format!("bridge correction on, adaptive cells with dt = {} near barriers", cfg.dt)
    } else {
        format!("bridge correction off, fixed grid dt = {} (one-sided first-passage bias)", cfg.dt)
    };
    let hits = outcomes.iter().filter(|o| o.exit == Exit::Horizon).count();
    if perpetual {
        note.push_str(&format!(
            "; perpetual functional truncated at t_max = {:.4} (discount {:.1e})",
            spec.t_max,
            (-spec.q * spec.t_max).exp()
        ));
    } else if spec.q > 0.0 && hits * 1000 > outcomes.len() {
        note.push_str(&format!(
            "; warning: horizon t_max = {:.4} reached on {:.3}% of paths",
            spec.t_max,
            100.0 * hits as f64 / outcomes.len() as f64
        ));
    }
    note
}

/// Average several functionals over one set of outcomes.
pub fn summarize(
    model: &LevyModel,
    spec: &PathSpec,
    cfg: &SimConfig,
    outcomes: &[PathOutcome],
    functionals: &[Functional],
    note: &str,
) -> Result<Vec<SimResult>> {
    functionals
        .iter()
        .map(|f| {
            let scale = match f.needs_scale() {
                Some(a) => Some(ScaleFn::with_range(model, spec.q, (spec.upper - a + 5.0).max(FALLBACK_X_MAX))?),
                None => None,
            };
            let w_neg_a = match (f, &scale) {
                (Functional::ObservedOrScaleAtDown { a }, Some(s)) => s.w(-a)?,
                _ => 1.0,
            };
            let values = outcomes
                .iter()
                .map(|o| f.value(o, spec.q, spec.lower, scale.as_ref(), w_neg_a))
                .collect::<Result<Vec<f64>>>()?;
            let samples: Vec<f64> = if cfg.antithetic {
                values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
            } else {
                values
            };
            let (estimate, stderr) = mean_stderr(&samples);
            Ok(SimResult { estimate, stderr, n: samples.len(), dt: cfg.dt, seed: cfg.seed, bias_note: note.to_string() })
        })
        .collect()
}

/// Monte Carlo estimate of one functional of one process.
pub fn simulate_batch(
    model: &LevyModel,
    process: Process,
    params: &ProcessParams,
    functional: Functional,
    q: f64,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    let spec = process.path_spec(params, q, cfg.horizon(q))?;
    let outcomes = simulate_outcomes(model, &spec, cfg)?;
    let note = bias_note(model, &spec, cfg, &outcomes, process.is_perpetual());
    Ok(summarize(model, &spec, cfg, &outcomes, &[functional], &note)?.remove(0))
}

/// Monte Carlo estimate of E_x[e^{−q e_r} X(e_r); e_r < τ_b^+ ∧ τ_0^−].
pub fn estimate_resolvent_check(model: &LevyModel, q: f64, r: f64, b: f64, x: f64, cfg: &SimConfig) -> Result<SimResult> {
    if !(0.0..=b).contains(&x) {
        return Err(Error::Config(format!("need 0 <= x <= b, got x = {x}, b = {b}")));
    }
    let params = ProcessParams { r, a: f64::NAN, b, x };
    simulate_batch(model, Process::XObserved, &params, Functional::LevelAtObservation, q, cfg)
}
