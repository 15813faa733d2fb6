//! Run configuration, single runs, parameter sweeps and their file formats.
//!
//! Floating point values in CSV output use `{:.16e}` (17 significant
//! digits), so identical runs produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catenoid::Branch;
use crate::diagnostics::{self, CriticalAt, CriticalData, Diagnostics};
use crate::elliptic;
use crate::error::{Error, Result};
use crate::linalg::{SolverConfig, SolverMethod};
use crate::mesh::{FilmProfile, RectMesh};
use crate::stepper::{self, InitialCondition, Problem, RunOptions, RunOutcome, StepperConfig, Trajectory};

pub const TIMESERIES_HEADER: &str = "t,E,dE_dt,min_u,max_u,norm_proxy,symmetry_defect";
pub const SWEEP_HEADER: &str = "sigma,lambda,lambda_crit,outcome,t,detail";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub timeseries: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Final film profile, `z,u`.
    pub profile: Option<PathBuf>,
    /// Final transformed potential, `z,r,phi`.
    pub potential: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub n_z: usize,
    pub n_r: usize,
    pub t_end: f64,
    pub sample_interval: f64,
    pub ic: InitialCondition,
    pub branch: Branch,
    pub compute_critical: bool,
    pub stepper: StepperConfig,
    pub solver: SolverConfig,
    pub output: OutputPaths,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sigma: f64,
    lambda: f64,
    n_z: Option<usize>,
    n_r: Option<usize>,
    t_end: Option<f64>,
    sample_interval: Option<f64>,
    ic: Option<String>,
    branch: Option<String>,
    compute_critical: Option<bool>,
    dt_init: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    pinch_eps: Option<f64>,
    touch_eps: Option<f64>,
    norm_cap: Option<f64>,
    kappa: Option<f64>,
    q: Option<f64>,
    adapt_factor: Option<f64>,
    max_change_per_step: Option<f64>,
    tol: Option<f64>,
    solver: Option<SolverMethod>,
    max_iter: Option<usize>,
    #[serde(default)]
    output: OutputPaths,
}

/// Line (1-based) where `key` is assigned, for error messages.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .map_or(false, |rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn key_error(text: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match line_of(text, key) {
        Some(l) => Error::Config(format!("`{key}` (line {l}): {msg}")),
        None => Error::Config(format!("`{key}`: {msg}")),
    }
}

/// Parses `zero`, `catenoid(small|large)`, `scaled_catenoid(f)` or
/// `samples(v0, v1, ...)`.
pub fn parse_initial_condition(s: &str) -> Result<InitialCondition> {
    let s = s.trim();
    if s == "zero" {
        return Ok(InitialCondition::Zero);
    }
    let (head, args) = s
        .split_once('(')
        .and_then(|(h, rest)| rest.strip_suffix(')').map(|a| (h.trim(), a)))
        .ok_or_else(|| Error::InvalidArgument(format!("unrecognized initial condition `{s}`")))?;
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number `{}` in `{s}`", x.trim())))
    };
    match head {
        "catenoid" => Ok(InitialCondition::Catenoid(args.parse()?)),
        "scaled_catenoid" => Ok(InitialCondition::ScaledCatenoid(num(args)?)),
        "samples" => Ok(InitialCondition::Samples(
            args.split(',').map(num).collect::<Result<Vec<_>>>()?,
        )),
        _ => Err(Error::InvalidArgument(format!("unrecognized initial condition `{s}`"))),
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|sp| text[..sp.start.min(text.len())].lines().count().max(1));
        match line {
            Some(l) => Error::Config(format!("line {l}: {}", e.message())),
            None => Error::Config(e.message().to_string()),
        }
    })?;

    let d = StepperConfig::default();
    let norm_cap = match (raw.norm_cap, raw.kappa) {
        (Some(_), Some(_)) => {
            return Err(key_error(text, "kappa", "set either norm_cap or kappa, not both"))
        }
        (Some(c), None) => c,
        (None, Some(k)) => {
            if !(k > 0.0 && k < 1.0) {
                return Err(key_error(text, "kappa", format!("must lie in (0, 1), got {k}")));
            }
            1.0 / k
        }
        (None, None) => d.norm_cap,
    };
    let stepper = StepperConfig {
        dt_init: raw.dt_init.unwrap_or(d.dt_init),
        dt_min: raw.dt_min.unwrap_or(d.dt_min),
        dt_max: raw.dt_max.unwrap_or(d.dt_max),
        pinch_eps: raw.pinch_eps.unwrap_or(d.pinch_eps),
        touch_eps: raw.touch_eps.unwrap_or(d.touch_eps),
        norm_cap,
        q: raw.q.unwrap_or(d.q),
        adapt_factor: raw.adapt_factor.unwrap_or(d.adapt_factor),
        max_change_per_step: raw.max_change_per_step.unwrap_or(d.max_change_per_step),
    };
    let sd = SolverConfig::default();
    let solver = SolverConfig {
        tol: raw.tol.unwrap_or(sd.tol),
        method: raw.solver.unwrap_or(sd.method),
        max_iter: raw.max_iter.unwrap_or(sd.max_iter),
        ..sd
    };
    let cfg = RunConfig {
        sigma: raw.sigma,
        lambda: raw.lambda,
        n_z: raw.n_z.unwrap_or(129),
        n_r: raw.n_r.unwrap_or(129),
        t_end: raw.t_end.unwrap_or(1.0),
        sample_interval: raw.sample_interval.unwrap_or(0.0),
        ic: match raw.ic.as_deref() {
            Some(s) => parse_initial_condition(s).map_err(|e| key_error(text, "ic", e))?,
            None => InitialCondition::Zero,
        },
        branch: match raw.branch.as_deref() {
            Some(s) => s.parse().map_err(|e| key_error(text, "branch", e))?,
            None => Branch::Small,
        },
        compute_critical: raw.compute_critical.unwrap_or(false),
        stepper,
        solver,
        output: raw.output,
    };
    validate(&cfg, text)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, text: &str) -> Result<()> {
    let positive = [
        ("sigma", cfg.sigma),
        ("tol", cfg.solver.tol),
        ("dt_init", cfg.stepper.dt_init),
        ("dt_min", cfg.stepper.dt_min),
        ("dt_max", cfg.stepper.dt_max),
        ("max_change_per_step", cfg.stepper.max_change_per_step),
        ("norm_cap", cfg.stepper.norm_cap),
    ];
    for (key, v) in positive {
        if !(v > 0.0) || v.is_nan() {
            return Err(key_error(text, key, format!("must be positive, got {v}")));
        }
    }
    let nonneg = [
        ("lambda", cfg.lambda),
        ("t_end", cfg.t_end),
        ("sample_interval", cfg.sample_interval),
    ];
    for (key, v) in nonneg {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(key_error(text, key, format!("must be >= 0, got {v}")));
        }
    }
    if cfg.n_z < 5 || cfg.n_z % 2 == 0 {
        return Err(key_error(text, "n_z", format!("must be odd and >= 5, got {}", cfg.n_z)));
    }
    if cfg.n_r < 4 {
        return Err(key_error(text, "n_r", format!("must be >= 4, got {}", cfg.n_r)));
    }
    cfg.stepper.validate().map_err(|e| Error::Config(e.to_string()))?;
    let mesh = RectMesh::with_sizes(cfg.n_z, cfg.n_r)?;
    cfg.ic
        .build(mesh.z_grid(), cfg.sigma)
        .map_err(|e| key_error(text, "ic", e))?;
    Ok(())
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Machine-readable result of a single run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub outcome: RunOutcome,
    pub final_diagnostics: Diagnostics,
    pub steps: usize,
    /// `max_t ||u(t) - u0||_inf` over accepted steps.
    pub max_drift: f64,
    pub critical: Option<CriticalData>,
    pub critical_at_lambda: Option<CriticalAt>,
    pub config: RunConfig,
    pub wall_time_s: f64,
}

pub fn version_stamp() -> String {
    match option_env!("SOAPFILM_GIT_REV") {
        Some(rev) => format!("{} ({rev})", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}

impl RunConfig {
    pub fn mesh(&self) -> Result<RectMesh> {
        RectMesh::with_sizes(self.n_z, self.n_r)
    }

    pub fn problem(&self) -> Result<Problem> {
        let mut p = Problem::new(self.sigma, self.lambda, self.mesh()?)?;
        p.solver = self.solver;
        Ok(p)
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            t_end: self.t_end,
            sample_interval: self.sample_interval,
            keep_profiles: false,
        }
    }
}

pub fn write_timeseries(samples: &[Diagnostics], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{TIMESERIES_HEADER}")?;
    for d in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.energy),
            fmt_f64(d.energy_rate),
            fmt_f64(d.min_u),
            fmt_f64(d.max_u),
            fmt_f64(d.norm_proxy),
            fmt_f64(d.symmetry_defect)
        )?;
    }
    Ok(())
}

pub fn write_profile(u: &FilmProfile, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "z,u")?;
    for (z, x) in u.grid().nodes().iter().zip(u.values()) {
        writeln!(w, "{},{}", fmt_f64(*z), fmt_f64(*x))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Runs the configured trajectory and returns it with its summary. Writes
/// nothing.
pub fn simulate(cfg: &RunConfig) -> Result<(Trajectory, RunSummary)> {
    let started = Instant::now();
    let problem = cfg.problem()?;
    let u0 = cfg.ic.build(problem.grid(), cfg.sigma)?;
    let traj = stepper::run(&problem, u0, &cfg.stepper, &cfg.options())?;
    let critical = if cfg.compute_critical {
        Some(diagnostics::lambda_crit(cfg.sigma, cfg.branch, &problem.mesh, &cfg.solver)?)
    } else {
        None
    };
    let summary = RunSummary {
        version: version_stamp(),
        outcome: traj.outcome.clone(),
        final_diagnostics: traj
            .final_state
            .diagnostics
            .expect("run stores final diagnostics"),
        steps: traj.final_state.step_count,
        max_drift: traj.max_drift,
        critical,
        critical_at_lambda: critical.map(|c| c.at(cfg.lambda)),
        config: cfg.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((traj, summary))
}

/// [`simulate`] plus the configured output files.
pub fn run_single(cfg: &RunConfig) -> Result<RunSummary> {
    let (traj, summary) = simulate(cfg)?;
    let out = &cfg.output;
    if let Some(p) = &out.timeseries {
        write_timeseries(&traj.samples, create(p)?).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &out.profile {
        write_profile(&traj.final_state.u, create(p)?).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &out.potential {
        let problem = cfg.problem()?;
        let phi = elliptic::solve_potential(&traj.final_state.u, cfg.sigma, &problem.mesh, &cfg.solver)?;
        phi.write_csv(create(p)?).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &out.summary {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &summary)
            .map_err(|e| Error::io(p, std::io::Error::other(e)))?;
        writeln!(w).map_err(|e| Error::io(p, e))?;
    }
    Ok(summary)
}

/// A sweep voltage: absolute, or a multiple of `lambda_crit(sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Absolute(f64),
    TimesCritical(f64),
}

impl std::str::FromStr for LambdaSpec {
    type Err = Error;

    /// `0.5`, or `2crit` / `0.5*crit` for multiples of the critical voltage.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("bad lambda `{s}`"));
        if let Some(k) = s.strip_suffix("crit") {
            let k = k.trim().trim_end_matches('*').trim();
            let k = if k.is_empty() { 1.0 } else { k.parse::<f64>().map_err(|_| bad())? };
            return Ok(LambdaSpec::TimesCritical(k));
        }
        s.parse::<f64>().map(LambdaSpec::Absolute).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    pub lambda: f64,
    pub lambda_crit: Option<f64>,
    pub outcome: String,
    pub t: f64,
    pub detail: String,
}

fn sweep_point(base: &RunConfig, sigma: f64, spec: LambdaSpec, crit: &std::result::Result<f64, String>) -> SweepRow {
    let lambda = match (spec, crit) {
        (LambdaSpec::Absolute(l), _) => l,
        (LambdaSpec::TimesCritical(k), Ok(lc)) => k * lc,
        (LambdaSpec::TimesCritical(_), Err(e)) => {
            return SweepRow {
                sigma,
                lambda: f64::NAN,
                lambda_crit: None,
                outcome: "error".into(),
                t: f64::NAN,
                detail: e.clone(),
            }
        }
    };
    let mut cfg = base.clone();
    cfg.sigma = sigma;
    cfg.lambda = lambda;
    cfg.compute_critical = false;
    let result = cfg.problem().and_then(|p| {
        let u0 = cfg.ic.build(p.grid(), sigma)?;
        stepper::run(&p, u0, &cfg.stepper, &cfg.options())
    });
    let lambda_crit = crit.as_ref().ok().copied();
    match result {
        Ok(traj) => SweepRow {
            sigma,
            lambda,
            lambda_crit,
            outcome: traj.outcome.tag().into(),
            t: traj.outcome.time(),
            detail: match &traj.outcome {
                RunOutcome::SolverFailure { detail, .. } => detail.clone(),
                _ => String::new(),
            },
        },
        Err(e) => SweepRow {
            sigma,
            lambda,
            lambda_crit,
            outcome: "error".into(),
            t: f64::NAN,
            detail: e.to_string(),
        },
    }
}

/// Runs every `(sigma, lambda)` pair on a pool of `jobs` workers. Rows come
/// back in input order (sigma-major) regardless of `jobs`.
pub fn run_sweep(base: &RunConfig, sigmas: &[f64], lambdas: &[LambdaSpec], jobs: usize) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mesh = base.mesh()?;
    pool.install(|| {
        let crits: Vec<std::result::Result<f64, String>> = sigmas
            .par_iter()
            .map(|&s| {
                diagnostics::lambda_crit(s, base.branch, &mesh, &base.solver)
                    .map(|c| c.lambda_crit)
                    .map_err(|e| e.to_string())
            })
            .collect();
        let points: Vec<(usize, LambdaSpec)> = (0..sigmas.len())
            .flat_map(|i| lambdas.iter().map(move |&l| (i, l)))
            .collect();
        Ok(points
            .par_iter()
            .map(|&(i, spec)| sweep_point(base, sigmas[i], spec, &crits[i]))
            .collect())
    })
}

pub fn write_sweep(rows: &[SweepRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.sigma),
            fmt_f64(r.lambda),
            r.lambda_crit.map(fmt_f64).unwrap_or_default(),
            r.outcome,
            fmt_f64(r.t),
            r.detail.replace([',', '\n'], ";")
        )?;
    }
    Ok(())
}
