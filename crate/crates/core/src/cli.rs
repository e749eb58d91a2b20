//! Command-line front end: `scale`, `identity`, `simulate`, `verify` and
//! `sweep`. Every flag is validated before any computation.
//!
//! Exit codes: 0 on success, 1 on a validation or evaluation error, 2 when a
//! verification suite has failing checks.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::identities::{self, barrier_sweep, IdentityRequest, Mode, Needs, Params, SweepParam};
use crate::levy::LevyModel;
use crate::scale::ScaleFn;
use crate::sim::{simulate_batch, Functional, Process, ProcessParams, SimConfig};
use crate::verify::{run_suite, Suite, VerifyOptions, DEFAULT_ABS_FLOOR, DEFAULT_Z_MAX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "parisian", version, about = "Parisian fluctuation identities for spectrally negative Levy processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate W, W', W-bar, W-double-bar, Z and Z-bar on a grid as CSV.
    Scale(ScaleArgs),
    /// Evaluate one registry identity and print JSON.
    Identity(IdentityArgs),
    /// Monte Carlo estimate of one path functional, printed as JSON.
    Simulate(SimulateArgs),
    /// Compare the registry against Monte Carlo and the barrier-at-infinity limits.
    Verify(VerifyArgs),
    /// Evaluate an identity along a range of one parameter as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 10.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
}

#[derive(Args, Debug)]
pub struct IdentityArgs {
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub point: PointArgs,
    /// Limit mode: a_inf, b_inf or perpetual.
    #[arg(long)]
    pub limit: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// x, x_reflected_above, x_reflected_below, xr, xtilde_b, yr_a, ytilde_ab, x_observed, ybar_observed.
    #[arg(long)]
    pub process: String,
    /// up_exit, down_exit, creep, overshoot, periodic_dividends, singular_dividends, injections,
    /// scale_at_down, theta_scale_at_down, observed_or_scale_at_down, level_at_observation.
    #[arg(long)]
    pub functional: String,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub antithetic: bool,
    /// Turn the Brownian-bridge crossing correction off.
    #[arg(long)]
    pub no_bridge: bool,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.paths,
            dt: self.dt,
            t_max: self.t_max,
            seed: self.seed,
            antithetic: self.antithetic,
            bridge: !self.no_bridge,
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "full")]
    pub suite: String,
    #[arg(long)]
    pub wide: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = DEFAULT_Z_MAX)]
    pub z_max: f64,
    #[arg(long, default_value_t = DEFAULT_ABS_FLOOR)]
    pub abs_floor: f64,
    /// Directory for verify_checks.csv, verify_limits.csv and verify_report.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long)]
    pub limit: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// JSON encoding of a value that may be the +∞ sentinel.
pub fn json_number(v: f64) -> Value {
    if v == f64::INFINITY {
        Value::String("inf".into())
    } else {
        json!(v)
    }
}

fn load_model(path: &Path) -> Result<LevyModel> {
    LevyModel::from_file(path)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::Internal(e.to_string())),
    }
}

fn mode_for(spec: &identities::IdentitySpec, limit: Option<&str>) -> Result<Mode> {
    match limit {
        None => Ok(if spec.supports(Mode::Finite) { Mode::Finite } else { spec.default_mode() }),
        Some(s) => {
            let m = Mode::parse(s)?;
            if m == Mode::Finite {
                return Err(Error::Config("--limit takes a_inf, b_inf or perpetual".into()));
            }
            Ok(m)
        }
    }
}

fn cmd_scale(args: &ScaleArgs, out: &mut dyn Write) -> Result<()> {
    if !(args.q >= 0.0 && args.q.is_finite()) {
        return Err(Error::Config(format!("--q must be finite and >= 0, got {}", args.q)));
    }
    if !(args.x_max > 0.0 && args.x_max.is_finite() && args.step > 0.0 && args.step <= args.x_max) {
        return Err(Error::Config(format!("need 0 < --step <= --x-max, got step {} and x-max {}", args.step, args.x_max)));
    }
    let model = load_model(&args.model)?;
    let s = ScaleFn::with_range(&model, args.q, args.x_max.max(crate::scale::FALLBACK_X_MAX))?;
    let n = (args.x_max / args.step + 1e-9).floor() as usize;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["x", "W", "Wp", "Wbar", "Wbarbar", "Z", "Zbar"]).map_err(io)?;
    for i in 0..=n {
        let x = i as f64 * args.step;
        w.write_record([
            x.to_string(),
            s.w(x)?.to_string(),
            s.w_prime(x)?.to_string(),
            s.w_bar(x)?.to_string(),
            s.w_bar2(x)?.to_string(),
            s.z(x)?.to_string(),
            s.z_bar(x)?.to_string(),
        ])
        .map_err(io)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
        .map_err(|e| Error::Internal(e.to_string()))?;
    emit(out, args.out.as_deref(), &text)
}

fn cmd_identity(args: &IdentityArgs, out: &mut dyn Write) -> Result<()> {
    let spec = identities::lookup(&args.id)?;
    let mode = mode_for(spec, args.limit.as_deref())?;
    let p = &args.point;
    let need = |name: &str, v: Option<f64>, used: bool| -> Result<f64> {
        match (v, used) {
            (Some(v), _) => Ok(v),
            (None, true) => Err(Error::Config(format!("{} in {mode} mode needs --{name}", spec.id))),
            (None, false) => Ok(f64::NAN),
        }
    };
    let params = Params {
        q: p.q,
        r: need("r", p.r, spec.needs == Needs::Parisian)?,
        a: need("a", p.a, mode.uses_a())?,
        b: need("b", p.b, mode.uses_b())?,
        x: p.x,
        theta: p.theta,
    };
    let model = load_model(&args.model)?;
    let v = identities::evaluate(&model, &IdentityRequest { id: args.id.clone(), mode, params })?;
    let doc = json!({
        "id": spec.id,
        "mode": mode.as_str(),
        "params": {
            "q": params.q,
            "r": p.r,
            "a": if mode.uses_a() { p.a } else { None },
            "b": if mode.uses_b() { p.b } else { None },
            "x": params.x,
            "theta": if spec.uses_theta { Some(params.theta) } else { None },
        },
        "value": json_number(v.value),
        "meaning": v.meaning,
        "citation": v.formula_citation,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))? + "\n";
    emit(out, args.out.as_deref(), &text)
}

fn parse_functional(name: &str, a: f64, theta: f64) -> Result<Functional> {
    Ok(match name {
        "up_exit" => Functional::UpExit,
        "down_exit" => Functional::DownExit { theta },
        "creep" => Functional::Creep,
        "overshoot" => Functional::Overshoot,
        "periodic_dividends" => Functional::PeriodicDividends,
        "singular_dividends" => Functional::SingularDividends,
        "injections" => Functional::Injections,
        "scale_at_down" => Functional::ScaleAtDown { a },
        "theta_scale_at_down" => Functional::ThetaScaleAtDown { a, theta },
        "observed_or_scale_at_down" => Functional::ObservedOrScaleAtDown { a },
        "level_at_observation" => Functional::LevelAtObservation,
        _ => return Err(Error::Config(format!("unknown functional `{name}`"))),
    })
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let process = Process::parse(&args.process)?;
    let functional = parse_functional(&args.functional, args.a, args.theta)?;
    if !(args.theta >= 0.0 && args.theta.is_finite()) {
        return Err(Error::Config(format!("--theta must be finite and >= 0, got {}", args.theta)));
    }
    let cfg = args.sim.config();
    cfg.validate()?;
    let params = ProcessParams { r: args.r, a: args.a, b: args.b, x: args.x };
    process.path_spec(&params, args.q, cfg.horizon(args.q))?;
    let model = load_model(&args.model)?;
    let res = simulate_batch(&model, process, &params, functional, args.q, &cfg)?;
    let text = serde_json::to_string_pretty(&res).map_err(|e| Error::Internal(e.to_string()))? + "\n";
    emit(out, args.out.as_deref(), &text)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let suite = Suite::parse(&args.suite)?;
    let cfg = args.sim.config();
    cfg.validate()?;
    if !(args.z_max > 0.0 && args.abs_floor >= 0.0) {
        return Err(Error::Config("--z-max must be > 0 and --abs-floor >= 0".into()));
    }
    let model = load_model(&args.model)?;
    let name = args.model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    let opts = VerifyOptions { suite, wide: args.wide, z_max: args.z_max, abs_floor: args.abs_floor };
    let report = run_suite(&[(name, model)], &cfg, &opts)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        emit(out, Some(&dir.join("verify_checks.csv")), &report.checks_csv()?)?;
        emit(out, Some(&dir.join("verify_limits.csv")), &report.limits_csv()?)?;
        emit(out, Some(&dir.join("verify_report.json")), &(report.to_json()? + "\n"))?;
    }
    let mut text = String::new();
    for c in &report.checks {
        text.push_str(&format!(
            "{:<5} {:<28} analytic {:>12.6} mc {:>12.6} se {:>9.2e} z {:>6.2}\n",
            format!("{:?}", c.verdict).to_lowercase().replace("notapplicable", "n/a"),
            c.identity_id,
            c.analytic,
            c.mc_estimate,
            c.stderr,
            c.z
        ));
    }
    for l in &report.limits {
        text.push_str(&format!(
            "{:<5} {} {} -> {} {}: final deviation {:.2e}\n",
            format!("{:?}", l.verdict).to_lowercase().replace("notapplicable", "n/a"),
            l.finite_id,
            l.finite_mode,
            l.limit_id,
            l.limit_mode,
            l.final_deviation
        ));
    }
    let s = &report.summary;
    text.push_str(&format!(
        "{} checks: {} passed, {} failed, {} n/a; {} limit checks, {} failed\n",
        s.checks, s.passed, s.failed, s.not_applicable, s.limit_checks, s.limit_failed
    ));
    emit(out, None, &text)?;
    Ok(report.passed())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let spec = identities::lookup(&args.id)?;
    let mode = mode_for(spec, args.limit.as_deref())?;
    let param = SweepParam::parse(&args.param)?;
    let model = load_model(&args.model)?;
    let params = Params { q: args.q, r: args.r, a: args.a, b: args.b, x: args.x, theta: args.theta };
    let table = barrier_sweep(&model, &args.id, mode, &params, param, args.from, args.to, args.steps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record([param.as_str(), "value", "argmax", "error"]).map_err(io)?;
    for (i, row) in table.rows.iter().enumerate() {
        let (value, error) = match &row.value {
            Ok(v) if *v == f64::INFINITY => ("inf".to_string(), String::new()),
            Ok(v) => (v.to_string(), String::new()),
            Err(e) => (String::new(), e.clone()),
        };
        let flag = if table.argmax == Some(i) { "true" } else { "false" };
        w.write_record([row.param.to_string(), value, flag.to_string(), error]).map_err(io)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
        .map_err(|e| Error::Internal(e.to_string()))?;
    emit(out, args.out.as_deref(), &text)
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Scale(a) => cmd_scale(a, out).map(|_| true),
        Command::Identity(a) => cmd_identity(a, out).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a, out).map(|_| true),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Sweep(a) => cmd_sweep(a, out).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}
