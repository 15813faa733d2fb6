//! The potential problem on the reference rectangle.
//!
//! Pulling the gap between film and cylinder back onto `[-1, 1] x [1, 2]`
//! turns the axisymmetric Laplace problem into `L_v phi = 0` with
//!
//! ```text
//! L_v w = c_zz w_zz + c_zr w_zr + c_rr w_rr + c_r w_r
//! c_zz = s^2 (1 - v)
//! c_zr = -2 s^2 v_z (2 - r)
//! c_rr = (1 + s^2 v_z^2 (2 - r)^2) / (1 - v)
//! c_r  = -s^2 (2 - r) (v_zz + 2 v_z^2 / (1 - v)) + 1 / (2 v + (1 - v) r)
//! ```
//!
//! and Dirichlet data `ln(r) / ln(2)` on all four sides. The same operator in
//! divergence form is `div(A grad w) + d . grad w`; `det A = s^2` identically.
//! The operator is discretized in non-divergence form with central
//! differences (a 9-point stencil because of the mixed term).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{self, CsrBuilder, CsrMatrix, SolveStats, SolverConfig};
use crate::mesh::{FilmProfile, RectMesh};

/// Distance to `+-1` below which the transformed operator is treated as
/// degenerate.
pub const DEGENERACY_MARGIN: f64 = 1e-3;

/// Node-wise coefficients of the transformed operator in both forms.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub mesh: RectMesh,
    pub sigma: f64,
    pub c_zz: Vec<f64>,
    pub c_zr: Vec<f64>,
    pub c_rr: Vec<f64>,
    pub c_r: Vec<f64>,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub d2: Vec<f64>,
}

impl CoefficientField {
    /// Constant-coefficient field `s^2 w_zz + w_rr` (no first-order term).
    pub fn laplacian(mesh: RectMesh, sigma: f64) -> Self {
        let n = mesh.len();
        let s2 = sigma * sigma;
        Self {
            mesh,
            sigma,
            c_zz: vec![s2; n],
            c_zr: vec![0.0; n],
            c_rr: vec![1.0; n],
            c_r: vec![0.0; n],
            a11: vec![s2; n],
            a12: vec![0.0; n],
            a22: vec![1.0; n],
            d2: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// `max |det A - sigma^2|` over all nodes.
    pub det_residual: f64,
}

/// Transformed potential on the reference rectangle.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub mesh: RectMesh,
    pub values: Vec<f64>,
    pub stats: Option<SolveStats>,
}

impl PotentialField {
    pub fn from_fn(mesh: RectMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(mesh.len());
        for i in 0..mesh.n_z() {
            for j in 0..mesh.n_r() {
                values.push(f(mesh.z_grid().z(i), mesh.r(j)));
            }
        }
        Self {
            mesh,
            values,
            stats: None,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.index(i, j)]
    }

    /// Largest excursion of interior values outside `[0, 1]`.
    pub fn max_principle_excess(&self) -> f64 {
        self.values
            .iter()
            .map(|&p| (-p).max(p - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    /// CSV snapshot with header `z,r,phi`, rows ordered by z then r.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "z,r,phi")?;
        for i in 0..self.mesh.n_z() {
            let z = self.mesh.z_grid().z(i);
            for j in 0..self.mesh.n_r() {
                writeln!(
                    w,
                    "{},{},{}",
                    crate::cli_io::fmt_f64(z),
                    crate::cli_io::fmt_f64(self.mesh.r(j)),
                    crate::cli_io::fmt_f64(self.at(i, j))
                )?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

/// Dirichlet data of the transformed problem.
pub fn boundary_data(r: f64) -> f64 {
    r.ln() / std::f64::consts::LN_2
}

pub fn assemble_coefficients(v: &FilmProfile, sigma: f64, mesh: &RectMesh) -> Result<CoefficientField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if v.len() != mesh.n_z() {
        return Err(Error::InvalidArgument(format!(
            "profile has {} nodes, mesh has {} z-nodes",
            v.len(),
            mesh.n_z()
        )));
    }
    v.check_margin(DEGENERACY_MARGIN)?;

    let n = mesh.len();
    let s2 = sigma * sigma;
    let mut c = CoefficientField {
        mesh: mesh.clone(),
        sigma,
        c_zz: vec![0.0; n],
        c_zr: vec![0.0; n],
        c_rr: vec![0.0; n],
        c_r: vec![0.0; n],
        a11: vec![0.0; n],
        a12: vec![0.0; n],
        a22: vec![0.0; n],
        d2: vec![0.0; n],
    };
    let (u, uz, uzz) = (v.values(), v.u_z(), v.u_zz());
    for i in 0..mesh.n_z() {
        let (vi, vz, vzz) = (u[i], uz[i], uzz[i]);
        let one_m = 1.0 - vi;
        for j in 0..mesh.n_r() {
            let r = mesh.r(j);
            let k = mesh.index(i, j);
            let t = 2.0 - r;
            let denom = 2.0 * vi + one_m * r;
            let a11 = s2 * one_m;
            let a12 = -s2 * vz * t;
            let a22 = (1.0 + s2 * vz * vz * t * t) / one_m;
            let d2 = 1.0 / denom;
            c.a11[k] = a11;
            c.a12[k] = a12;
            c.a22[k] = a22;
            c.d2[k] = d2;
            c.c_zz[k] = s2 * one_m;
            c.c_zr[k] = -2.0 * s2 * vz * t;
            c.c_rr[k] = (1.0 + s2 * vz * vz * t * t) / one_m;
            c.c_r[k] = -s2 * t * (vzz + 2.0 * vz * vz / one_m) + d2;
        }
    }
    Ok(c)
}

/// Eigenvalue bounds of `A(v)` from the trace and determinant of each 2x2 block.
pub fn check_ellipticity(c: &CoefficientField) -> EllipticityReport {
    let s2 = c.sigma * c.sigma;
    let mut rep = EllipticityReport {
        alpha_min: f64::INFINITY,
        alpha_max: f64::NEG_INFINITY,
        det_residual: 0.0,
    };
    for k in 0..c.a11.len() {
        let (a, b, d) = (c.a11[k], c.a12[k], c.a22[k]);
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let hi = half_tr + disc;
        // Smaller root via det / hi avoids cancellation when hi >> lo.
        let det = a * d - b * b;
        let lo = if hi > 0.0 { det / hi } else { half_tr - disc };
        rep.alpha_min = rep.alpha_min.min(lo);
        rep.alpha_max = rep.alpha_max.max(hi);
        rep.det_residual = rep.det_residual.max((det - s2).abs());
    }
    rep
}

/// Applies the discrete operator `L_h` at interior nodes; boundary entries are 0.
pub fn apply_operator(c: &CoefficientField, phi: &[f64]) -> Vec<f64> {
    let m = &c.mesh;
    let (hz, hr) = (m.h_z(), m.h_r());
    let mut out = vec![0.0; m.len()];
    for i in 1..m.n_z() - 1 {
        for j in 1..m.n_r() - 1 {
            let k = m.index(i, j);
            let p = |di: isize, dj: isize| {
                phi[m.index((i as isize + di) as usize, (j as isize + dj) as usize)]
            };
            let zz = ((p(-1, 0) + p(1, 0)) - 2.0 * p(0, 0)) / (hz * hz);
            let rr = ((p(0, -1) + p(0, 1)) - 2.0 * p(0, 0)) / (hr * hr);
            let r1 = (p(0, 1) - p(0, -1)) / (2.0 * hr);
            let zr = ((p(1, 1) + p(-1, -1)) - (p(1, -1) + p(-1, 1))) / (4.0 * hz * hr);
            out[k] = c.c_zz[k] * zz + c.c_zr[k] * zr + c.c_rr[k] * rr + c.c_r[k] * r1;
        }
    }
    out
}

/// Assembles `-L_h` on interior unknowns and the right-hand side
/// `F - (-L_h)[boundary values]`.
fn assemble_system(
    c: &CoefficientField,
    source: Option<&[f64]>,
    boundary: impl Fn(usize, usize) -> f64,
) -> (CsrMatrix, Vec<f64>) {
    let m = &c.mesh;
    let (nz, nr) = (m.n_z(), m.n_r());
    let (hz, hr) = (m.h_z(), m.h_r());
    let ni = nr - 2;
    let unknowns = (nz - 2) * ni;
    let unknown = |i: usize, j: usize| (i - 1) * ni + (j - 1);
    let mut builder = CsrBuilder::with_capacity(unknowns, 9 * unknowns);
    let mut rhs = vec![0.0; unknowns];
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);

    for i in 1..nz - 1 {
        for j in 1..nr - 1 {
            let k = m.index(i, j);
            let czz = c.c_zz[k] / (hz * hz);
            let crr = c.c_rr[k] / (hr * hr);
            let cr = c.c_r[k] / (2.0 * hr);
            let czr = c.c_zr[k] / (4.0 * hz * hr);
            // Stencil weights of L_h; the matrix row holds their negatives.
            let stencil = [
                (0isize, 0isize, -2.0 * czz - 2.0 * crr),
                (-1, 0, czz),
                (1, 0, czz),
                (0, -1, crr - cr),
                (0, 1, crr + cr),
                (1, 1, czr),
                (-1, -1, czr),
                (1, -1, -czr),
                (-1, 1, -czr),
            ];
            let row_id = unknown(i, j);
            let mut b = source.map_or(0.0, |f| f[k]);
            row.clear();
            for &(di, dj, w) in &stencil {
                if w == 0.0 && !(di == 0 && dj == 0) {
                    continue;
                }
                let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                if m.is_boundary(ii, jj) {
                    b += w * boundary(ii, jj);
                } else {
                    row.push((unknown(ii, jj), -w));
                }
            }
            rhs[row_id] = b;
            builder.push_row(&row);
        }
    }
    (builder.build(), rhs)
}

fn solve_system(
    c: &CoefficientField,
    source: Option<&[f64]>,
    boundary: impl Fn(usize, usize) -> f64 + Copy,
    cfg: &SolverConfig,
) -> Result<PotentialField> {
    let m = &c.mesh;
    let (a, b) = assemble_system(c, source, boundary);
    let (x, stats) = linalg::solve(&a, &b, cfg)?;
    let ni = m.n_r() - 2;
    let mut values = vec![0.0; m.len()];
    for i in 0..m.n_z() {
        for j in 0..m.n_r() {
            values[m.index(i, j)] = if m.is_boundary(i, j) {
                boundary(i, j)
            } else {
                x[(i - 1) * ni + (j - 1)]
            };
        }
    }
    Ok(PotentialField {
        mesh: m.clone(),
        values,
        stats: Some(stats),
    })
}

/// Solves `L_v phi = 0` with `phi = ln(r)/ln(2)` on the boundary, given
/// assembled coefficients.
pub fn solve_potential_with(c: &CoefficientField, cfg: &SolverConfig) -> Result<PotentialField> {
    let rs = c.mesh.r_nodes().to_vec();
    solve_system(c, None, |_, j| boundary_data(rs[j]), cfg)
}

pub fn solve_potential(v: &FilmProfile, sigma: f64, mesh: &RectMesh, cfg: &SolverConfig) -> Result<PotentialField> {
    let c = assemble_coefficients(v, sigma, mesh)?;
    solve_potential_with(&c, cfg)
}

/// Solves `-L_v phi = F` with zero Dirichlet data. `source` is node-wise on
/// the full mesh; boundary entries are ignored.
pub fn solve_with_source(c: &CoefficientField, source: &[f64], cfg: &SolverConfig) -> Result<PotentialField> {
    if source.len() != c.mesh.len() {
        return Err(Error::InvalidArgument(format!(
            "source has {} entries, mesh has {} nodes",
            source.len(),
            c.mesh.len()
        )));
    }
    let m = &c.mesh;
    for i in 1..m.n_z() - 1 {
        for j in 1..m.n_r() - 1 {
            if !source[m.index(i, j)].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite source at node ({i}, {j})"
                )));
            }
        }
    }
    solve_system(c, Some(source), |_, _| 0.0, cfg)
}

/// `d phi / d r` at the film edge `r = 1`, one-sided second order.
pub fn trace_dr_at_film(phi: &PotentialField) -> Result<Vec<f64>> {
    let m = &phi.mesh;
    if m.n_r() < 4 {
        return Err(Error::InvalidArgument(format!(
            "trace needs n_r >= 4, got {}",
            m.n_r()
        )));
    }
    let hr = m.h_r();
    Ok((0..m.n_z())
        .map(|i| (3.0 * (phi.at(i, 1) - phi.at(i, 0)) - (phi.at(i, 2) - phi.at(i, 1))) / (2.0 * hr))
        .collect())
}
