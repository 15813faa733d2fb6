//! Reference solutions and convergence studies for the solvers.
//!
//! Manufactured sources are built from closed-form derivatives of the exact
//! field, never from differencing it, so measured errors belong to the
//! solver alone.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::catenoid::Catenoid;
use crate::diagnostics;
use crate::elliptic::{self, CoefficientField, PotentialField};
use crate::error::Result;
use crate::linalg::SolverConfig;
use crate::mesh::{FilmProfile, Grid1D, RectMesh};

/// Value and derivatives `(phi, phi_z, phi_r, phi_zz, phi_zr, phi_rr)`.
pub type Jet = (f64, f64, f64, f64, f64, f64);

/// Exact field and film profile for a manufactured-solution test.
#[derive(Debug, Clone, Copy)]
pub struct MmsCase {
    pub name: &'static str,
    pub sigma: f64,
    /// Film profile; must vanish at `z = +-1`.
    pub profile: fn(f64) -> f64,
    /// Exact solution; must vanish on the rectangle boundary.
    pub exact: fn(f64, f64) -> Jet,
    /// Replace the transformed operator by `s^2 w_zz + w_rr`.
    pub laplacian_only: bool,
}

impl MmsCase {
    pub fn coefficients(&self, mesh: &RectMesh) -> Result<CoefficientField> {
        if self.laplacian_only {
            return Ok(CoefficientField::laplacian(mesh.clone(), self.sigma));
        }
        let v = FilmProfile::from_fn(mesh.z_grid().clone(), self.profile)?;
        elliptic::assemble_coefficients(&v, self.sigma, mesh)
    }

    pub fn exact_field(&self, mesh: &RectMesh) -> PotentialField {
        let f = self.exact;
        PotentialField::from_fn(mesh.clone(), |z, r| f(z, r).0)
    }
}

/// `F = -(L_v phi*)` node-wise from exact derivatives and assembled coefficients.
pub fn mms_source(case: &MmsCase, c: &CoefficientField) -> Vec<f64> {
    let m = &c.mesh;
    let mut f = vec![0.0; m.len()];
    for i in 0..m.n_z() {
        for j in 0..m.n_r() {
            let k = m.index(i, j);
            let (_, _, pr, pzz, pzr, prr) = (case.exact)(m.z_grid().z(i), m.r(j));
            f[k] = -(c.c_zz[k] * pzz + c.c_zr[k] * pzr + c.c_rr[k] * prr + c.c_r[k] * pr);
        }
    }
    f
}

#[cfg(test)]
fn poly_bubble(z: f64, r: f64) -> Jet {
    // (1 - z^2)(r - 1)(2 - r)
    let a = 1.0 - z * z;
    let b = (r - 1.0) * (2.0 - r);
    let (a_z, a_zz) = (-2.0 * z, -2.0);
    let (b_r, b_rr) = (3.0 - 2.0 * r, -2.0);
    (a * b, a_z * b, a * b_r, a_zz * b, a_z * b_r, a * b_rr)
}

fn quartic_bubble(z: f64, r: f64) -> Jet {
    // (1 - z^4)(r - 1)(2 - r)(1 + r^2)
    let a = 1.0 - z.powi(4);
    let (a_z, a_zz) = (-4.0 * z.powi(3), -12.0 * z * z);
    let (p, p_r) = ((r - 1.0) * (2.0 - r), 3.0 - 2.0 * r);
    let (q, q_r) = (1.0 + r * r, 2.0 * r);
    let b = p * q;
    let b_r = p_r * q + p * q_r;
    let b_rr = -2.0 * q + 2.0 * p_r * q_r + 2.0 * p;
    (a * b, a_z * b, a * b_r, a_zz * b, a_z * b_r, a * b_rr)
}

fn sine_product(z: f64, r: f64) -> Jet {
    // sin(pi (z + 1) / 2) sin(pi (r - 1))
    let kz = PI / 2.0;
    let (sz, cz) = (kz * (z + 1.0)).sin_cos();
    let (sr, cr) = (PI * (r - 1.0)).sin_cos();
    (
        sz * sr,
        kz * cz * sr,
        PI * sz * cr,
        -kz * kz * sz * sr,
        kz * PI * cz * cr,
        -PI * PI * sz * sr,
    )
}

fn skewed_bubble(z: f64, r: f64) -> Jet {
    // exp(z) (1 - z^2) (r - 1)(2 - r) r
    let e = z.exp();
    let a = e * (1.0 - z * z);
    let a_z = e * (1.0 - z * z - 2.0 * z);
    let a_zz = e * (1.0 - z * z - 4.0 * z - 2.0);
    let b = (r - 1.0) * (2.0 - r) * r; // -r^3 + 3 r^2 - 2 r
    let b_r = -3.0 * r * r + 6.0 * r - 2.0;
    let b_rr = -6.0 * r + 6.0;
    (a * b, a_z * b, a * b_r, a_zz * b, a_z * b_r, a * b_rr)
}

/// Manufactured cases used by the verification suite.
pub fn standard_cases() -> Vec<MmsCase> {
    vec![
        MmsCase {
            name: "quartic_flat",
            sigma: 1.0,
            profile: |_| 0.0,
            exact: quartic_bubble,
            laplacian_only: false,
        },
        MmsCase {
            name: "poisson_eigen",
            // s = 2 makes the operator the unit Laplacian in z' = (z + 1)/2.
            sigma: 2.0,
            profile: |_| 0.0,
            exact: sine_product,
            laplacian_only: true,
        },
        MmsCase {
            name: "sine_cosine_film",
            sigma: 1.5,
            profile: |z| 0.2 * (PI * z / 2.0).cos(),
            exact: sine_product,
            laplacian_only: false,
        },
        MmsCase {
            name: "skewed_film",
            sigma: 0.8,
            profile: |z| 0.3 * (1.0 - z * z) * (1.0 + 0.4 * z),
            exact: skewed_bubble,
            laplacian_only: false,
        },
    ]
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn observed_order(hs: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub case: String,
    pub h: f64,
    pub error: f64,
    /// Least-squares order over all resolutions of the case.
    pub order: f64,
}

/// Max-node error of `solve_with_source` against the exact field.
pub fn mms_error(case: &MmsCase, n: usize, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let mesh = RectMesh::with_sizes(n, n)?;
    let c = case.coefficients(&mesh)?;
    let f = mms_source(case, &c);
    let phi = elliptic::solve_with_source(&c, &f, cfg)?;
    let exact = case.exact_field(&mesh);
    let err = phi
        .values
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((mesh.h_z(), err))
}

/// Runs each case at each resolution. Resolutions are node counts per side.
pub fn convergence_study(cases: &[MmsCase], resolutions: &[usize], cfg: &SolverConfig) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for case in cases {
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for &n in resolutions {
            let (h, e) = mms_error(case, n, cfg)?;
            hs.push(h);
            errs.push(e);
        }
        let order = observed_order(&hs, &errs);
        rows.extend(hs.iter().zip(&errs).map(|(&h, &e)| ConvergenceRow {
            case: case.name.to_string(),
            h,
            error: e,
            order,
        }));
    }
    Ok(rows)
}

pub fn write_convergence_csv(rows: &[ConvergenceRow], mut w: impl Write) -> std::io::Result<()> {
    use crate::cli_io::fmt_f64;
    writeln!(w, "case,h,error,order")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.case, fmt_f64(r.h), fmt_f64(r.error), fmt_f64(r.order))?;
    }
    Ok(())
}

/// Adaptive Simpson quadrature; the reference for trapezoid-based quantities.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Outcome of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// MMS orders on all standard cases, trace exactness on a quadratic, and
/// the convergence order of the catenoid energy.
pub fn run_verification_suite(resolutions: &[usize], cfg: &SolverConfig) -> Result<VerificationReport> {
    let cases = standard_cases();
    let rows = convergence_study(&cases, resolutions, cfg)?;
    let mut checks = Vec::new();
    for case in &cases {
        let order = rows.iter().find(|r| r.case == case.name).map_or(f64::NAN, |r| r.order);
        checks.push(CheckResult {
            name: format!("mms_order[{}]", case.name),
            value: order,
            threshold: 1.9,
            passed: order >= 1.9,
        });
    }

    let mut trace_err: f64 = 0.0;
    for &n in resolutions {
        let mesh = RectMesh::with_sizes(n, n)?;
        let q = PotentialField::from_fn(mesh, |z, r| 3.0 * r * r - 2.0 * r + z);
        for t in elliptic::trace_dr_at_film(&q)? {
            trace_err = trace_err.max((t - 4.0).abs());
        }
    }
    checks.push(CheckResult {
        name: "trace_exact_on_quadratic".into(),
        value: trace_err,
        threshold: 1e-10,
        passed: trace_err <= 1e-10,
    });

    let cat = Catenoid::new(1.0)?;
    let exact = -adaptive_simpson(&|z| (cat.value(z) + 1.0).ln(), -1.0, 1.0, 1e-14);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for &n in resolutions {
        let g = Grid1D::new(n)?;
        hs.push(g.h());
        errs.push((diagnostics::energy(&cat.profile(&g))? - exact).abs());
    }
    let order = observed_order(&hs, &errs);
    checks.push(CheckResult {
        name: "catenoid_energy_order".into(),
        value: order,
        threshold: 1.9,
        passed: order >= 1.9,
    });
    Ok(VerificationReport { rows, checks })
}
