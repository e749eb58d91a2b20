//! Mechanical verification of the identity registry: every identity with a
//! path functional is compared with its Monte Carlo estimate, and every
//! finite/limit pair is checked along a barrier sequence.
//!
//! Processes are simulated once per (model, parameter set) and shared by all
//! functionals defined on them. Report order follows the registry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::identities::{
    self, evaluate_limit_consistency, limit_pairs, registry, Direction, LimitPair, Mode, Params, A_SEQUENCE,
    B_SEQUENCE,
};
use crate::levy::LevyModel;
use crate::sim::{bias_note, simulate_outcomes, summarize, Functional, Process, ProcessParams, SimConfig};

pub const DEFAULT_Z_MAX: f64 = 4.0;
pub const DEFAULT_ABS_FLOOR: f64 = 2e-3;
/// Largest deviation from the limit allowed at the last sequence point.
pub const LIMIT_FINAL_DEVIATION: f64 = 1e-4;
/// Largest ratio of successive deviations allowed along the sequence.
pub const LIMIT_RATIO: f64 = 0.2;
/// Path count used by the smoke suite.
pub const SMOKE_PATHS: usize = 10_000;
/// Tolerance for analytic values against a zero-variance estimate.
pub const ROUNDING_FLOOR: f64 = 1e-12;

pub const CANONICAL: Params = Params { q: 0.05, r: 1.0, a: -2.0, b: 3.0, x: 0.5, theta: 0.5 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Two-sided exit of X and X_r, fewer paths.
    Smoke,
    Full,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "smoke" => Ok(Suite::Smoke),
            "full" => Ok(Suite::Full),
            _ => Err(Error::Config(format!("unknown suite `{s}`; expected smoke or full"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub suite: Suite,
    /// Sweep a 3×3 (x, b) grid instead of the canonical set.
    pub wide: bool,
    pub z_max: f64,
    pub abs_floor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { suite: Suite::Full, wide: false, z_max: DEFAULT_Z_MAX, abs_floor: DEFAULT_ABS_FLOOR }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The identity's preconditions exclude this model (creeping without σ).
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub model: String,
    pub identity_id: String,
    pub mode: Mode,
    pub params: Params,
    pub analytic: f64,
    pub mc_estimate: f64,
    pub stderr: f64,
    pub z: f64,
    pub rule: String,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCheck {
    pub model: String,
    pub finite_id: String,
    pub finite_mode: Mode,
    pub limit_id: String,
    pub limit_mode: Mode,
    pub sequence: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    pub deviations: Vec<f64>,
    pub ratios: Vec<f64>,
    pub final_deviation: f64,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
    pub limit_checks: usize,
    pub limit_failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub wide: bool,
    pub config: SimConfig,
    pub z_max: f64,
    pub abs_floor: f64,
    pub checks: Vec<CheckReport>,
    pub limits: Vec<LimitCheck>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.limit_failed == 0
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn checks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record([
            "model", "identity_id", "mode", "q", "r", "a", "b", "x", "theta", "analytic", "mc_estimate", "stderr", "z",
            "rule", "verdict", "note",
        ])
        .map_err(io)?;
        for c in &self.checks {
            let p = c.params;
            w.write_record([
                c.model.clone(),
                c.identity_id.clone(),
                c.mode.to_string(),
                p.q.to_string(),
                p.r.to_string(),
                p.a.to_string(),
                p.b.to_string(),
                p.x.to_string(),
                p.theta.to_string(),
                c.analytic.to_string(),
                c.mc_estimate.to_string(),
                c.stderr.to_string(),
                c.z.to_string(),
                c.rule.clone(),
                verdict_str(c.verdict).to_string(),
                c.note.clone(),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
            .map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn limits_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["model", "finite_id", "finite_mode", "limit_id", "limit_mode", "sequence", "deviations", "ratios", "limit", "final_deviation", "verdict", "note"])
            .map_err(io)?;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        for l in &self.limits {
            w.write_record([
                l.model.clone(),
                l.finite_id.clone(),
                l.finite_mode.to_string(),
                l.limit_id.clone(),
                l.limit_mode.to_string(),
                join(&l.sequence),
                join(&l.deviations),
                join(&l.ratios),
                l.limit.to_string(),
                l.final_deviation.to_string(),
                verdict_str(l.verdict).to_string(),
                l.note.clone(),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
            .map_err(|e| Error::Internal(e.to_string()))
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "n/a",
    }
}

/// The process and path functional whose expectation a finite-mode identity states.
pub fn mc_functional(id: &str, p: &Params) -> Option<(Process, Functional)> {
    use Functional::*;
    use Process::*;
    let (a, theta) = (p.a, p.theta);
    Some(match id {
        "classic.up" => (X, UpExit),
        "classic.down" => (X, DownExit { theta }),
        "classic.creep.two_sided" => (X, Creep),
        "refl_above.down_time" => (XReflectedAbove, DownExit { theta: 0.0 }),
        "refl_above.dividends" => (XReflectedAbove, SingularDividends),
        "refl_below.up_time" => (XReflectedBelow, UpExit),
        "refl_below.injection" => (XReflectedBelow, Injections),
        "lemma.W_overshoot" => (XObserved, ScaleAtDown { a }),
        "lemma.W_overshoot_reflected" => (YbarObserved, ScaleAtDown { a }),
        "lemma.Z_overshoot" => (XObserved, ThetaScaleAtDown { a, theta }),
        "lemma.Z_overshoot_reflected" => (YbarObserved, ThetaScaleAtDown { a, theta }),
        "lemma.HX" => (XObserved, ObservedOrScaleAtDown { a }),
        "lemma.X_at_er" => (XObserved, LevelAtObservation),
        "xr.dividends" => (Xr, PeriodicDividends),
        "xr.up" => (Xr, UpExit),
        "xr.down" => (Xr, DownExit { theta }),
        "xr.creep" => (Xr, Creep),
        "xr.overshoot" => (Xr, Overshoot),
        "xtilde.div_periodic" => (XtildeB, PeriodicDividends),
        "xtilde.div_singular" => (XtildeB, SingularDividends),
        "xtilde.down" => (XtildeB, DownExit { theta }),
        "xtilde.overshoot" => (XtildeB, Overshoot),
        "yr.dividends" => (YrA, PeriodicDividends),
        "yr.injection" => (YrA, Injections),
        "yr.up" => (YrA, UpExit),
        "ytilde.div_periodic" => (YtildeAB, PeriodicDividends),
        "ytilde.div_singular" => (YtildeAB, SingularDividends),
        "ytilde.injection" => (YtildeAB, Injections),
        _ => return None,
    })
}

/// Every (id, mode) in the registry must have a Monte Carlo check (finite
/// mode) or take part in a limit pair.
pub fn check_coverage() -> Result<()> {
    let mut missing = Vec::new();
    for spec in registry() {
        for &mode in spec.modes {
            let mc = mode == Mode::Finite && mc_functional(spec.id, &CANONICAL).is_some();
            let limit = limit_pairs().iter().any(|p| {
                (p.finite_id == spec.id && p.finite_mode == mode) || (p.limit_id == spec.id && p.limit_mode == mode)
            });
            if !mc && !limit {
                missing.push(format!("{} ({mode})", spec.id));
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("identities without any check: {}", missing.join(", "))))
    }
}

fn judge(analytic: f64, estimate: f64, stderr: f64, z_max: f64, abs_floor: f64) -> (f64, Verdict) {
    let diff = estimate - analytic;
    // A zero-variance estimate (e.g. no overshoot without jumps) only has to
    // match the analytic value up to rounding.
    let z = if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= ROUNDING_FLOOR * analytic.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let ok = z.abs() <= z_max || diff.abs() <= abs_floor;
    (z, if ok { Verdict::Pass } else { Verdict::Fail })
}

fn rule(z_max: f64, abs_floor: f64) -> String {
    format!("|z| <= {z_max} or |analytic - mc| <= {abs_floor}")
}

fn seed_for(seed: u64, process: Process) -> u64 {
    seed.wrapping_add(process as u64)
}

fn not_applicable(model_name: &str, id: &str, p: &Params, why: String, z_max: f64, abs_floor: f64) -> CheckReport {
    CheckReport {
        model: model_name.to_string(),
        identity_id: id.to_string(),
        mode: Mode::Finite,
        params: *p,
        analytic: f64::NAN,
        mc_estimate: f64::NAN,
        stderr: f64::NAN,
        z: f64::NAN,
        rule: rule(z_max, abs_floor),
        verdict: Verdict::NotApplicable,
        note: why,
    }
}

/// Compare one identity with its Monte Carlo estimate. Identities without a
/// path functional are verified through [`run_limit_check`] instead.
pub fn run_check(
    model_name: &str,
    model: &LevyModel,
    id: &str,
    params: &Params,
    cfg: &SimConfig,
    z_max: f64,
    abs_floor: f64,
) -> Result<CheckReport> {
    identities::lookup(id)?;
    let Some((process, _)) = mc_functional(id, params) else {
        let pairs: Vec<_> = limit_pairs().iter().filter(|p| p.limit_id == id).map(|p| p.finite_id).collect();
        return Err(Error::Unsupported(format!(
            "{id} has no path functional; it is verified by limit consistency against {}",
            pairs.join(", ")
        )));
    };
    let mut reports = run_process_checks(model_name, model, process, &[id], params, cfg, z_max, abs_floor)?;
    Ok(reports.remove(0))
}

#[allow(clippy::too_many_arguments)]
fn run_process_checks(
    model_name: &str,
    model: &LevyModel,
    process: Process,
    ids: &[&str],
    p: &Params,
    cfg: &SimConfig,
    z_max: f64,
    abs_floor: f64,
) -> Result<Vec<CheckReport>> {
    let mut analytic = Vec::with_capacity(ids.len());
    for id in ids {
        analytic.push(identities::evaluate_id(model, id, Mode::Finite, p));
    }
    let cfg = SimConfig { seed: seed_for(cfg.seed, process), ..*cfg };
    let needs_paths = analytic.iter().any(|a| a.is_ok());
    let pp = ProcessParams { r: p.r, a: p.a, b: p.b, x: p.x };
    let sim = if needs_paths {
        let spec = process.path_spec(&pp, p.q, cfg.horizon(p.q))?;
        let outcomes = simulate_outcomes(model, &spec, &cfg)?;
        let note = bias_note(model, &spec, &cfg, &outcomes, process.is_perpetual());
        let fs: Vec<Functional> = ids.iter().map(|id| mc_functional(id, p).map(|(_, f)| f)).collect::<Option<_>>().ok_or_else(|| {
            Error::Internal("identity without a functional in a process group".into())
        })?;
        Some(summarize(model, &spec, &cfg, &outcomes, &fs, &note)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(ids.len());
    for (k, (id, a)) in ids.iter().zip(analytic).enumerate() {
        match a {
            Err(Error::Precondition(why)) => out.push(not_applicable(model_name, id, p, why, z_max, abs_floor)),
            Err(e) => return Err(e),
            Ok(value) => {
                let s = &sim.as_ref().ok_or_else(|| Error::Internal("missing simulation".into()))?[k];
                let (z, verdict) = judge(value, s.estimate, s.stderr, z_max, abs_floor);
                out.push(CheckReport {
                    model: model_name.to_string(),
                    identity_id: id.to_string(),
                    mode: Mode::Finite,
                    params: *p,
                    analytic: value,
                    mc_estimate: s.estimate,
                    stderr: s.stderr,
                    z,
                    rule: rule(z_max, abs_floor),
                    verdict,
                    note: s.bias_note.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Check one finite/limit pair along its standard barrier sequence.
pub fn run_limit_check(model_name: &str, model: &LevyModel, pair: &LimitPair, params: &Params) -> Result<LimitCheck> {
    let spec = identities::lookup(pair.finite_id)?;
    let seq: &[f64] = match pair.direction {
        Direction::A => &A_SEQUENCE,
        Direction::B => &B_SEQUENCE,
    };
    let base = LimitCheck {
        model: model_name.to_string(),
        finite_id: pair.finite_id.to_string(),
        finite_mode: pair.finite_mode,
        limit_id: pair.limit_id.to_string(),
        limit_mode: pair.limit_mode,
        sequence: seq.to_vec(),
        values: vec![],
        limit: f64::NAN,
        deviations: vec![],
        ratios: vec![],
        final_deviation: f64::NAN,
        verdict: Verdict::NotApplicable,
        note: String::new(),
    };
    if spec.needs_sigma && model.sigma() == 0.0 {
        return Ok(LimitCheck { note: "needs sigma > 0".into(), ..base });
    }
    let r = evaluate_limit_consistency(model, pair, params, seq)?;
    let verdict = if r.passes(LIMIT_FINAL_DEVIATION, LIMIT_RATIO) { Verdict::Pass } else { Verdict::Fail };
    Ok(LimitCheck {
        values: r.values,
        limit: r.limit,
        deviations: r.deviations,
        ratios: r.ratios,
        final_deviation: r.final_deviation,
        verdict,
        note: format!("final deviation <= {LIMIT_FINAL_DEVIATION}, ratios <= {LIMIT_RATIO}"),
        ..base
    })
}

/// Parameter sets exercised by a suite.
pub fn parameter_sets(wide: bool) -> Vec<Params> {
    if !wide {
        return vec![CANONICAL];
    }
    let mut sets = Vec::new();
    for b in [2.0, 3.0, 4.0] {
        for x in [0.25, 0.5, 1.5] {
            sets.push(Params { b, x, ..CANONICAL });
        }
    }
    sets
}

fn in_suite(suite: Suite, process: Process) -> bool {
    match suite {
        Suite::Full => true,
        Suite::Smoke => matches!(process, Process::X | Process::Xr),
    }
}

/// Run every check of `suite` for each named model.
pub fn run_suite(models: &[(String, LevyModel)], cfg: &SimConfig, opts: &VerifyOptions) -> Result<SuiteReport> {
    check_coverage()?;
    cfg.validate()?;
    let cfg = match opts.suite {
        Suite::Smoke => SimConfig { n_paths: cfg.n_paths.min(SMOKE_PATHS), ..*cfg },
        Suite::Full => *cfg,
    };
    let mut checks = Vec::new();
    let mut limits = Vec::new();
    for (name, model) in models {
        for p in parameter_sets(opts.wide) {
            // Group ids by process in registry order of first appearance.
            let mut groups: Vec<(Process, Vec<&str>)> = Vec::new();
            for spec in registry() {
                if let Some((process, _)) = mc_functional(spec.id, &p) {
                    if !in_suite(opts.suite, process) {
                        continue;
                    }
                    match groups.iter_mut().find(|(g, _)| *g == process) {
                        Some((_, ids)) => ids.push(spec.id),
                        None => groups.push((process, vec![spec.id])),
                    }
                }
            }
            let mut by_id = Vec::new();
            for (process, ids) in &groups {
                by_id.extend(run_process_checks(name, model, *process, ids, &p, &cfg, opts.z_max, opts.abs_floor)?);
            }
            for spec in registry() {
                if let Some(pos) = by_id.iter().position(|c| c.identity_id == spec.id) {
                    checks.push(by_id.remove(pos));
                }
            }
        }
        for pair in limit_pairs() {
            if opts.suite == Suite::Smoke && !(pair.finite_id.starts_with("xr.") || pair.finite_id.starts_with("classic.")) {
                continue;
            }
            limits.push(run_limit_check(name, model, pair, &CANONICAL)?);
        }
    }
    let count = |v: Verdict| checks.iter().filter(|c| c.verdict == v).count();
    let summary = Summary {
        checks: checks.len(),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        not_applicable: count(Verdict::NotApplicable),
        limit_checks: limits.len(),
        limit_failed: limits.iter().filter(|l| l.verdict == Verdict::Fail).count(),
    };
    Ok(SuiteReport {
        suite: opts.suite,
        wide: opts.wide,
        config: cfg,
        z_max: opts.z_max,
        abs_floor: opts.abs_floor,
        checks,
        limits,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_fully_covered() {
        check_coverage().unwrap();
        for spec in registry() {
            if spec.modes.contains(&Mode::Finite) {
                assert!(mc_functional(spec.id, &CANONICAL).is_some(), "{}", spec.id);
            }
        }
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(judge(1.0, 1.03, 0.01, 4.0, 2e-3).1, Verdict::Pass);
        assert_eq!(judge(1.0, 1.05, 0.01, 4.0, 2e-3).1, Verdict::Fail);
        assert_eq!(judge(0.0, 1e-3, 1e-5, 4.0, 2e-3).1, Verdict::Pass);
        assert_eq!(judge(-8.9e-16, 0.0, 0.0, 4.0, 0.0), (0.0, Verdict::Pass));
        assert_eq!(judge(1e-6, 0.0, 0.0, 4.0, 0.0), (f64::NEG_INFINITY, Verdict::Fail));
    }

    #[test]
    fn non_simulable_is_routed() {
        let m = LevyModel::brownian(0.2, 1.0).unwrap();
        let cfg = SimConfig { n_paths: 10, ..SimConfig::default() };
        let e = run_check("bm", &m, "classic.down.inf", &CANONICAL, &cfg, 4.0, 2e-3).unwrap_err();
        assert!(matches!(e, Error::Unsupported(_)));
    }
}
