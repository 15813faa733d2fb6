//! Semi-implicit time stepping of the film equation
//!
//! ```text
//! u_t + B(u) u = G(u),   B(v) w = -s^2 / (1 + s^2 v_z^2) w_zz,   G(u) = -1/(u+1) + lambda g(u)
//! ```
//!
//! Each step freezes `B` and `G` at the current profile and solves
//! `(I + dt B(u^n)) u^{n+1} = u^n + dt G(u^n)`, a tridiagonal system. The
//! nonlocal force needs one elliptic solve per accepted or rejected step
//! attempt sequence (it does not depend on `dt`).

use serde::{Deserialize, Serialize};

use crate::catenoid::{Branch, Catenoid};
use crate::diagnostics::{self, Diagnostics};
use crate::error::{Error, Result};
use crate::force;
use crate::linalg::{solve_tridiagonal, SolverConfig};
use crate::mesh::{FilmProfile, Grid1D, RectMesh};

/// Physical parameters plus the discretization of the potential problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub sigma: f64,
    pub lambda: f64,
    pub mesh: RectMesh,
    pub solver: SolverConfig,
}

impl Problem {
    pub fn new(sigma: f64, lambda: f64, mesh: RectMesh) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            sigma,
            lambda,
            mesh,
            solver: SolverConfig::default(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        self.mesh.z_grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub pinch_eps: f64,
    pub touch_eps: f64,
    /// Cap on [`diagnostics::norm_proxy`]; `1/kappa`.
    pub norm_cap: f64,
    pub q: f64,
    /// Growth factor for `dt` after an easy step.
    pub adapt_factor: f64,
    pub max_change_per_step: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-10,
            dt_max: 1e-2,
            pinch_eps: 0.02,
            touch_eps: 0.02,
            norm_cap: 1.0 / 0.01,
            q: 4.0,
            adapt_factor: 1.5,
            max_change_per_step: 1e-2,
        }
    }
}

impl StepperConfig {
    /// Constant step size `dt`.
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            max_change_per_step: f64::INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        for (name, v) in [("pinch_eps", self.pinch_eps), ("touch_eps", self.touch_eps)] {
            if !(v > 0.0 && v < 0.5) {
                return bad(format!("{name} must lie in (0, 0.5), got {v}"));
            }
        }
        if !(self.norm_cap > 0.0) {
            return bad(format!("norm_cap must be positive, got {}", self.norm_cap));
        }
        if !(self.q >= 1.0) {
            return bad(format!("q must be >= 1, got {}", self.q));
        }
        if !(self.adapt_factor >= 1.0) {
            return bad(format!("adapt_factor must be >= 1, got {}", self.adapt_factor));
        }
        if !(self.max_change_per_step > 0.0) {
            return bad(format!(
                "max_change_per_step must be positive, got {}",
                self.max_change_per_step
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: FilmProfile,
    /// Size of the last accepted step (0 before the first step).
    pub last_dt: f64,
    /// Step size the next attempt starts from.
    pub next_dt: f64,
    pub step_count: usize,
    pub diagnostics: Option<Diagnostics>,
}

impl SimState {
    pub fn new(u: FilmProfile, cfg: &StepperConfig) -> Self {
        Self {
            t: 0.0,
            u,
            last_dt: 0.0,
            next_dt: cfg.dt_init,
            step_count: 0,
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { t_end: f64 },
    PinchOff { t: f64, z: f64 },
    TouchedCylinder { t: f64, z: f64 },
    NormBlowup { t: f64, norm: f64 },
    SolverFailure { t: f64, detail: String },
}

impl RunOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            RunOutcome::Completed { .. } => "completed",
            RunOutcome::PinchOff { .. } => "pinch_off",
            RunOutcome::TouchedCylinder { .. } => "touched_cylinder",
            RunOutcome::NormBlowup { .. } => "norm_blowup",
            RunOutcome::SolverFailure { .. } => "solver_failure",
        }
    }

    pub fn time(&self) -> f64 {
        match *self {
            RunOutcome::Completed { t_end } => t_end,
            RunOutcome::PinchOff { t, .. }
            | RunOutcome::TouchedCylinder { t, .. }
            | RunOutcome::NormBlowup { t, .. }
            | RunOutcome::SolverFailure { t, .. } => t,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunOutcome::Completed { .. })
    }
}

/// Tridiagonal rows of `B(v)`: interior rows are
/// `-s^2/(1 + s^2 v_z^2) * (1, -2, 1) / h^2`, boundary rows are zero.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * w[i];
                if i > 0 {
                    s += self.lower[i] * w[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * w[i + 1];
                }
                s
            })
            .collect()
    }
}

pub fn diffusion_coefficient(sigma: f64, v_z: f64) -> f64 {
    let s2 = sigma * sigma;
    s2 / (1.0 + s2 * v_z * v_z)
}

pub fn assemble_b(v: &FilmProfile, sigma: f64) -> TridiagonalOperator {
    let n = v.len();
    let h2 = v.grid().h() * v.grid().h();
    let mut op = TridiagonalOperator {
        lower: vec![0.0; n],
        diag: vec![0.0; n],
        upper: vec![0.0; n],
    };
    for i in 1..n - 1 {
        let a = diffusion_coefficient(sigma, v.u_z()[i]) / h2;
        op.lower[i] = -a;
        op.diag[i] = 2.0 * a;
        op.upper[i] = -a;
    }
    op
}

/// Returned by [`step`]: the advanced state and what was measured on the
/// state it started from.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: SimState,
    /// Diagnostics of the starting state; `energy_rate` is the PDE-rate form.
    pub start: Diagnostics,
    pub rejections: usize,
    pub max_change: f64,
}

pub fn step(s: &SimState, p: &Problem, cfg: &StepperConfig) -> Result<StepReport> {
    step_capped(s, p, cfg, f64::INFINITY)
}

/// Like [`step`] but never takes a step longer than `dt_cap`.
pub fn step_capped(s: &SimState, p: &Problem, cfg: &StepperConfig, dt_cap: f64) -> Result<StepReport> {
    let u = &s.u;
    let n = u.len();
    let (rhs, _) = force::evaluate_rhs(u, p.sigma, p.lambda, &p.mesh, &p.solver)?;
    let rate = diagnostics::pde_rate(u, p.sigma, &rhs.rhs);
    let start = Diagnostics::collect(s.t, u, diagnostics::energy_rate(u, &rate)?, cfg.q)?;
    let b = assemble_b(u, p.sigma);

    let mut dt = s.next_dt.min(cfg.dt_max).min(dt_cap);
    let mut rejections = 0;
    loop {
        let lower: Vec<f64> = b.lower.iter().map(|x| dt * x).collect();
        let upper: Vec<f64> = b.upper.iter().map(|x| dt * x).collect();
        let diag: Vec<f64> = b.diag.iter().map(|x| 1.0 + dt * x).collect();
        let mut f: Vec<f64> = u
            .values()
            .iter()
            .zip(&rhs.rhs)
            .map(|(&x, &g)| x + dt * g)
            .collect();
        f[0] = 0.0;
        f[n - 1] = 0.0;
        let next = solve_tridiagonal(&lower, &diag, &upper, &f).ok_or(Error::SolverFailure {
            iterations: 0,
            residual: f64::INFINITY,
        })?;
        let change = next
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change <= cfg.max_change_per_step && change.is_finite() {
            let mut next = next;
            next[0] = 0.0;
            next[n - 1] = 0.0;
            let new_u = FilmProfile::new(u.grid().clone(), next)?;
            let mut next_dt = dt;
            if change < 0.5 * cfg.max_change_per_step && dt >= s.next_dt.min(cfg.dt_max) {
                next_dt = (dt * cfg.adapt_factor).min(cfg.dt_max);
            }
            return Ok(StepReport {
                state: SimState {
                    t: s.t + dt,
                    u: new_u,
                    last_dt: dt,
                    next_dt: next_dt.max(cfg.dt_min),
                    step_count: s.step_count + 1,
                    diagnostics: Some(start),
                },
                start,
                rejections,
                max_change: change,
            });
        }
        if dt <= cfg.dt_min {
            return Err(Error::SolverFailure {
                iterations: rejections,
                residual: change,
            });
        }
        dt = (0.5 * dt).max(cfg.dt_min);
        rejections += 1;
    }
}

/// Which singular mode, if any, the state has entered. Checked in the order
/// pinch-off, cylinder contact, norm blow-up.
pub fn classify(s: &SimState, cfg: &StepperConfig) -> Option<RunOutcome> {
    let g = s.u.grid();
    let (imin, umin) = s.u.min();
    if umin + 1.0 < cfg.pinch_eps {
        return Some(RunOutcome::PinchOff { t: s.t, z: g.z(imin) });
    }
    let (imax, umax) = s.u.max();
    if umax > 1.0 - cfg.touch_eps {
        return Some(RunOutcome::TouchedCylinder { t: s.t, z: g.z(imax) });
    }
    let norm = diagnostics::norm_proxy(&s.u, cfg.q);
    if !(norm <= cfg.norm_cap) {
        return Some(RunOutcome::NormBlowup { t: s.t, norm });
    }
    None
}

/// Initial profile recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    Catenoid(Branch),
    /// `factor * u_cat` on the small branch.
    ScaledCatenoid(f64),
    /// Values at uniform nodes on `[-1, 1]`, linearly interpolated onto the grid.
    Samples(Vec<f64>),
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid1D, sigma: f64) -> Result<FilmProfile> {
        let u = match self {
            InitialCondition::Zero => FilmProfile::zero(grid.clone()),
            InitialCondition::Catenoid(b) => Catenoid::for_sigma(sigma, *b)?.profile(grid),
            InitialCondition::ScaledCatenoid(f) => {
                let cat = Catenoid::for_sigma(sigma, Branch::Small)?;
                FilmProfile::from_fn(grid.clone(), |z| f * cat.value(z))?
            }
            InitialCondition::Samples(v) => {
                if v.len() < 2 {
                    return Err(Error::InvalidArgument("need at least two samples".into()));
                }
                if v[0] != 0.0 || v[v.len() - 1] != 0.0 {
                    return Err(Error::InvalidArgument(
                        "sample list must start and end with 0".into(),
                    ));
                }
                let m = (v.len() - 1) as f64;
                FilmProfile::from_fn(grid.clone(), |z| {
                    let x = (z + 1.0) * 0.5 * m;
                    let k = (x.floor() as usize).min(v.len() - 2);
                    let w = x - k as f64;
                    (1.0 - w) * v[k] + w * v[k + 1]
                })?
            }
        };
        if !u.is_admissible() {
            return Err(Error::InvalidArgument(
                "initial profile leaves (-1, 1)".into(),
            ));
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Minimum spacing of recorded samples; 0 records every step.
    pub sample_interval: f64,
    pub keep_profiles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub energy_rate: f64,
    pub symmetry_defect: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Diagnostics>,
    /// Profiles at the sample times, when requested.
    pub profiles: Vec<(f64, Vec<f64>)>,
    /// One record per accepted step, taken at the step's starting state.
    pub steps: Vec<StepRecord>,
    pub final_state: SimState,
    pub outcome: RunOutcome,
    /// `max_t ||u(t) - u0||_inf` over accepted states.
    pub max_drift: f64,
}

fn final_diagnostics(s: &SimState, p: &Problem, cfg: &StepperConfig) -> Diagnostics {
    let rate = force::evaluate_rhs(&s.u, p.sigma, p.lambda, &p.mesh, &p.solver)
        .ok()
        .and_then(|(f, _)| {
            let r = diagnostics::pde_rate(&s.u, p.sigma, &f.rhs);
            diagnostics::energy_rate(&s.u, &r).ok()
        })
        .unwrap_or(f64::NAN);
    Diagnostics::collect(s.t, &s.u, rate, cfg.q).unwrap_or(Diagnostics {
        t: s.t,
        energy: f64::NAN,
        energy_rate: rate,
        min_u: s.u.min().1,
        max_u: s.u.max().1,
        norm_proxy: diagnostics::norm_proxy(&s.u, cfg.q),
        symmetry_defect: diagnostics::symmetry_defect(&s.u),
    })
}

/// Steps from `u0` until `t_end` or until a singular mode is detected.
pub fn run(p: &Problem, u0: FilmProfile, cfg: &StepperConfig, opts: &RunOptions) -> Result<Trajectory> {
    cfg.validate()?;
    if !(opts.t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {}", opts.t_end)));
    }
    if u0.len() != p.mesh.n_z() {
        return Err(Error::InvalidArgument("initial profile does not match the mesh".into()));
    }
    if !u0.is_admissible() {
        return Err(Error::InvalidArgument("initial profile leaves (-1, 1)".into()));
    }
    let mut state = SimState::new(u0, cfg);
    let mut traj = Trajectory {
        samples: Vec::new(),
        profiles: Vec::new(),
        steps: Vec::new(),
        final_state: state.clone(),
        outcome: RunOutcome::Completed { t_end: opts.t_end },
        max_drift: 0.0,
    };
    let initial = state.u.values().to_vec();
    let mut next_sample = 0.0;
    // Guards against a last sliver step from rounding in accumulated t.
    let t_slack = 1e-12 * opts.t_end.max(1.0);

    let outcome = loop {
        if let Some(o) = classify(&state, cfg) {
            break o;
        }
        if state.t >= opts.t_end - t_slack {
            break RunOutcome::Completed { t_end: opts.t_end };
        }
        match step_capped(&state, p, cfg, opts.t_end - state.t) {
            Ok(report) => {
                if report.start.t >= next_sample - t_slack {
                    traj.samples.push(report.start);
                    if opts.keep_profiles {
                        traj.profiles.push((state.t, state.u.values().to_vec()));
                    }
                    next_sample = report.start.t + opts.sample_interval;
                }
                traj.steps.push(StepRecord {
                    t: report.start.t,
                    dt: report.state.last_dt,
                    energy_rate: report.start.energy_rate,
                    symmetry_defect: report.start.symmetry_defect,
                });
                state = report.state;
                let drift = state
                    .u
                    .values()
                    .iter()
                    .zip(&initial)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                traj.max_drift = traj.max_drift.max(drift);
            }
            Err(Error::Degenerate { z, value, .. }) => {
                break if value < 0.0 {
                    RunOutcome::PinchOff { t: state.t, z }
                } else {
                    RunOutcome::TouchedCylinder { t: state.t, z }
                };
            }
            Err(e @ Error::SolverFailure { .. }) => {
                break RunOutcome::SolverFailure {
                    t: state.t,
                    detail: e.to_string(),
                };
            }
            Err(e) => return Err(e),
        }
    };

    let last = final_diagnostics(&state, p, cfg);
    if traj.samples.last().map_or(true, |d| d.t < state.t) {
        traj.samples.push(last);
        if opts.keep_profiles {
            traj.profiles.push((state.t, state.u.values().to_vec()));
        }
    }
    state.diagnostics = Some(last);
    traj.final_state = state;
    traj.outcome = outcome;
    Ok(traj)
}
