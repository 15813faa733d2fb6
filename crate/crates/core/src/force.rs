//! Electrostatic force on the film and the full source term of the film
//! equation.

use crate::elliptic::{self, PotentialField, DEGENERACY_MARGIN};
use crate::error::{Error, Result};
use crate::linalg::SolverConfig;
use crate::mesh::{FilmProfile, Grid1D, RectMesh};

#[derive(Debug, Clone)]
pub struct ForceProfile {
    pub grid: Grid1D,
    /// Electrostatic force `g`, nonnegative.
    pub g: Vec<f64>,
    /// `-1/(u+1) + lambda g`; empty until [`full_rhs`] fills it.
    pub rhs: Vec<f64>,
}

/// `g_i = (1 + s^2 u_z^2)^{3/2} (d_r phi(z_i, 1))^2 / (1 - u_i)^2`.
///
/// The physical normal derivative at the film equals the reference-domain
/// trace divided by `1 - u`.
pub fn electrostatic_force(v: &FilmProfile, phi: &PotentialField, sigma: f64) -> Result<ForceProfile> {
    if phi.mesh.n_z() != v.len() {
        return Err(Error::InvalidArgument(
            "potential and profile live on different z-grids".into(),
        ));
    }
    let trace = elliptic::trace_dr_at_film(phi)?;
    let s2 = sigma * sigma;
    let mut g = Vec::with_capacity(v.len());
    for (i, (&u, &uz)) in v.values().iter().zip(v.u_z()).enumerate() {
        let gap = 1.0 - u;
        if !(gap >= DEGENERACY_MARGIN) {
            return Err(Error::Degenerate {
                node: i,
                z: v.grid().z(i),
                value: u,
            });
        }
        let slope = 1.0 + s2 * uz * uz;
        g.push(slope * slope.sqrt() * trace[i] * trace[i] / (gap * gap));
    }
    Ok(ForceProfile {
        grid: v.grid().clone(),
        g,
        rhs: Vec::new(),
    })
}

/// Fills `rhs_i = -1/(u_i + 1) + lambda g_i`.
pub fn full_rhs(v: &FilmProfile, mut f: ForceProfile, lambda: f64) -> Result<ForceProfile> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut rhs = Vec::with_capacity(v.len());
    for (i, &u) in v.values().iter().enumerate() {
        if !(u + 1.0 >= DEGENERACY_MARGIN) {
            return Err(Error::Degenerate {
                node: i,
                z: v.grid().z(i),
                value: u,
            });
        }
        let g = if lambda == 0.0 { 0.0 } else { lambda * f.g[i] };
        rhs.push(-1.0 / (u + 1.0) + g);
    }
    f.rhs = rhs;
    Ok(f)
}

/// Force-free source `-1/(u+1)`, used when `lambda = 0`.
pub fn capillary_rhs(v: &FilmProfile) -> Result<ForceProfile> {
    let f = ForceProfile {
        grid: v.grid().clone(),
        g: vec![0.0; v.len()],
        rhs: Vec::new(),
    };
    full_rhs(v, f, 0.0)
}

/// Solves the potential problem for `v` and returns `g` with `rhs` filled.
/// Skips the elliptic solve when `lambda = 0`.
pub fn evaluate_rhs(
    v: &FilmProfile,
    sigma: f64,
    lambda: f64,
    mesh: &RectMesh,
    cfg: &SolverConfig,
) -> Result<(ForceProfile, Option<PotentialField>)> {
    if lambda == 0.0 {
        return Ok((capillary_rhs(v)?, None));
    }
    v.check_margin(DEGENERACY_MARGIN)?;
    let phi = elliptic::solve_potential(v, sigma, mesh, cfg)?;
    let f = electrostatic_force(v, &phi, sigma)?;
    Ok((full_rhs(v, f, lambda)?, Some(phi)))
}
