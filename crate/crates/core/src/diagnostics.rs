//! Energy, flux identity and the constants behind the critical voltage.
//!
//! All integrals over `z` use the composite trapezoid rule on the film grid.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::catenoid::{Branch, Catenoid};
use crate::elliptic::{self, PotentialField};
use crate::error::{Error, Result};
use crate::linalg::SolverConfig;
use crate::mesh::{FilmProfile, Grid1D, RectMesh};

/// Snapshot of monitored quantities at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub energy: f64,
    pub energy_rate: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub norm_proxy: f64,
    pub symmetry_defect: f64,
}

impl Diagnostics {
    pub fn collect(t: f64, u: &FilmProfile, energy_rate: f64, q: f64) -> Result<Self> {
        Ok(Self {
            t,
            energy: energy(u)?,
            energy_rate,
            min_u: u.min().1,
            max_u: u.max().1,
            norm_proxy: norm_proxy(u, q),
            symmetry_defect: symmetry_defect(u),
        })
    }
}

pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = f[1..n - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n - 1]))
}

fn require_above_pinch(u: &FilmProfile) -> Result<()> {
    if let Some(i) = u.values().iter().position(|&x| !(x > -1.0)) {
        return Err(Error::Domain(format!(
            "u = {} <= -1 at node {i}",
            u.values()[i]
        )));
    }
    Ok(())
}

/// `E = -int ln(u + 1) dz`.
pub fn energy(u: &FilmProfile) -> Result<f64> {
    require_above_pinch(u)?;
    let f: Vec<f64> = u.values().iter().map(|&x| -(x + 1.0).ln()).collect();
    Ok(trapezoid(&f, u.grid().h()))
}

/// `dE/dt = -int u_t / (u + 1) dz` for a supplied node-wise rate.
pub fn energy_rate(u: &FilmProfile, du_dt: &[f64]) -> Result<f64> {
    require_above_pinch(u)?;
    if du_dt.len() != u.len() {
        return Err(Error::InvalidArgument("rate and profile lengths differ".into()));
    }
    let f: Vec<f64> = u
        .values()
        .iter()
        .zip(du_dt)
        .map(|(&x, &r)| -r / (x + 1.0))
        .collect();
    Ok(trapezoid(&f, u.grid().h()))
}

/// `u_t` from the equation itself: `G(u) - B(u) u`, i.e.
/// `G + s^2 u_zz / (1 + s^2 u_z^2)` in the interior, zero at the ends.
pub fn pde_rate(u: &FilmProfile, sigma: f64, source: &[f64]) -> Vec<f64> {
    let s2 = sigma * sigma;
    let n = u.len();
    let mut rate = vec![0.0; n];
    for i in 1..n - 1 {
        let uz = u.u_z()[i];
        rate[i] = source[i] + s2 * u.u_zz()[i] / (1.0 + s2 * uz * uz);
    }
    rate
}

/// Finite-difference rate `(u_new - u_old) / dt`.
pub fn difference_rate(old: &FilmProfile, new: &FilmProfile, dt: f64) -> Vec<f64> {
    old.values()
        .iter()
        .zip(new.values())
        .map(|(a, b)| (b - a) / dt)
        .collect()
}

/// `max_i |u(z_i) - u(-z_i)|`, pairing mirrored nodes exactly.
pub fn symmetry_defect(u: &FilmProfile) -> f64 {
    let v = u.values();
    let n = v.len();
    (0..n / 2).map(|i| (v[i] - v[n - 1 - i]).abs()).fold(0.0, f64::max)
}

/// Discrete `W^2_q` surrogate: `max|u| + max|u_z| + (sum |u_zz|^q h)^{1/q}`.
pub fn norm_proxy(u: &FilmProfile, q: f64) -> f64 {
    let h = u.grid().h();
    let sup = u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sup_z = u.u_z().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lq = u.u_zz().iter().map(|x| x.abs().powf(q) * h).sum::<f64>().powf(1.0 / q);
    sup + sup_z + lq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxIdentity {
    /// `int (u+1)(1 + (s u_z)^2) d_r psi(z, u+1) dz`.
    pub lhs: f64,
    /// Flux of `r (s^2 psi_z, psi_r)` through the two ring sides and the cylinder.
    pub rhs_boundary: f64,
    pub residual: f64,
}

/// Both sides of the Gauss identity for `div(r (s^2 psi_z, psi_r)) = 0` in the
/// physical gap, evaluated from the transformed potential.
pub fn flux_identity(u: &FilmProfile, phi: &PotentialField, sigma: f64) -> Result<FluxIdentity> {
    let m = &phi.mesh;
    if m.n_z() != u.len() {
        return Err(Error::InvalidArgument(
            "potential and profile live on different z-grids".into(),
        ));
    }
    let s2 = sigma * sigma;
    let (nz, nr) = (m.n_z(), m.n_r());
    let (hz, hr) = (m.h_z(), m.h_r());
    let trace = elliptic::trace_dr_at_film(phi)?;
    let (v, vz) = (u.values(), u.u_z());

    let film: Vec<f64> = (0..nz)
        .map(|i| (v[i] + 1.0) * (1.0 + s2 * vz[i] * vz[i]) * trace[i] / (1.0 - v[i]))
        .collect();
    let lhs = trapezoid(&film, hz);

    // d_r phi along a z = const column.
    let d_r = |i: usize, j: usize| -> f64 {
        if j == 0 {
            (-3.0 * phi.at(i, 0) + 4.0 * phi.at(i, 1) - phi.at(i, 2)) / (2.0 * hr)
        } else if j == nr - 1 {
            (3.0 * phi.at(i, j) - 4.0 * phi.at(i, j - 1) + phi.at(i, j - 2)) / (2.0 * hr)
        } else {
            (phi.at(i, j + 1) - phi.at(i, j - 1)) / (2.0 * hr)
        }
    };
    // Outward normal derivative of psi on the ring sides. The map is the
    // identity there (u = 0) but d_z of the reference radius is u_z (r - 2).
    let side = |i: usize, outward: f64| -> f64 {
        let f: Vec<f64> = (0..nr)
            .map(|j| {
                let r = m.r(j);
                let phi_z = if i == 0 {
                    (-3.0 * phi.at(0, j) + 4.0 * phi.at(1, j) - phi.at(2, j)) / (2.0 * hz)
                } else {
                    (3.0 * phi.at(i, j) - 4.0 * phi.at(i - 1, j) + phi.at(i - 2, j)) / (2.0 * hz)
                };
                let psi_z = phi_z + d_r(i, j) * vz[i] * (r - 2.0);
                s2 * r * outward * psi_z
            })
            .collect();
        trapezoid(&f, hr)
    };
    let top: Vec<f64> = (0..nz).map(|i| 2.0 * d_r(i, nr - 1) / (1.0 - v[i])).collect();
    let rhs_boundary = side(0, -1.0) + trapezoid(&top, hz) + side(nz - 1, 1.0);

    Ok(FluxIdentity {
        lhs,
        rhs_boundary,
        residual: (lhs - rhs_boundary).abs(),
    })
}

/// Flux integral of the catenoid's own potential; positive.
pub fn c15(sigma: f64, branch: Branch, mesh: &RectMesh, cfg: &SolverConfig) -> Result<f64> {
    let cat = Catenoid::for_sigma(sigma, branch)?;
    c15_for(&cat, mesh, cfg)
}

fn c15_for(cat: &Catenoid, mesh: &RectMesh, cfg: &SolverConfig) -> Result<f64> {
    let u = cat.profile(mesh.z_grid());
    let phi = elliptic::solve_potential(&u, cat.sigma, mesh, cfg)?;
    Ok(flux_identity(&u, &phi, cat.sigma)?.lhs)
}

/// `int ln(u_cat + 1) dz` on a fine trapezoid grid.
pub fn catenoid_log_integral(cat: &Catenoid) -> f64 {
    let g = Grid1D::new(8193).expect("odd grid");
    let f: Vec<f64> = g.nodes().iter().map(|&z| (cat.value(z) + 1.0).ln()).collect();
    trapezoid(&f, g.h())
}

/// Constants of the energy argument for one aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub sigma: f64,
    pub branch: Branch,
    pub c: f64,
    pub c15: f64,
    /// Inverse throat radius, `cosh(c)`.
    pub c16: f64,
    pub lambda_crit: f64,
    /// `int ln(u_cat + 1) dz`.
    pub catenoid_log_integral: f64,
    pub n_z: usize,
    pub n_r: usize,
}

/// Voltage-dependent part of [`CriticalData`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalAt {
    pub lambda: f64,
    pub c17: f64,
    /// `None` unless `c17 > 0`.
    pub t_max_bound: Option<f64>,
}

impl CriticalData {
    /// `pi/4 + sigma pi + 2 C16^2`.
    pub fn barrier_sum(&self) -> f64 {
        PI / 4.0 + self.sigma * PI + 2.0 * self.c16 * self.c16
    }

    /// Guaranteed energy decay rate; positive exactly when `lambda > lambda_crit`.
    pub fn c17(&self, lambda: f64) -> f64 {
        -self.barrier_sum() + (lambda * PI).sqrt() * self.c15 / (4.0 * std::f64::consts::SQRT_2)
    }

    pub fn t_max_bound(&self, lambda: f64) -> Option<f64> {
        let c17 = self.c17(lambda);
        (c17 > 0.0).then(|| (2.0 * LN_2 - self.catenoid_log_integral) / c17)
    }

    pub fn at(&self, lambda: f64) -> CriticalAt {
        CriticalAt {
            lambda,
            c17: self.c17(lambda),
            t_max_bound: self.t_max_bound(lambda),
        }
    }
}

pub fn lambda_crit(sigma: f64, branch: Branch, mesh: &RectMesh, cfg: &SolverConfig) -> Result<CriticalData> {
    let cat = Catenoid::for_sigma(sigma, branch)?;
    let c15 = c15_for(&cat, mesh, cfg)?;
    let c16 = cat.c.cosh();
    let mut data = CriticalData {
        sigma,
        branch,
        c: cat.c,
        c15,
        c16,
        lambda_crit: 0.0,
        catenoid_log_integral: catenoid_log_integral(&cat),
        n_z: mesh.n_z(),
        n_r: mesh.n_r(),
    };
    let k = data.barrier_sum();
    data.lambda_crit = 32.0 / (PI * c15 * c15) * k * k;
    Ok(data)
}

/// Both sides of `int arctan(s u_z) s u_z dz >= (pi/4) int sqrt(1 + (s u_z)^2) dz - pi`.
pub fn arctan_lower_bound_check(u: &FilmProfile, sigma: f64) -> (f64, f64) {
    let h = u.grid().h();
    let a: Vec<f64> = u.u_z().iter().map(|&d| (sigma * d).atan() * sigma * d).collect();
    let b: Vec<f64> = u.u_z().iter().map(|&d| (1.0 + sigma * sigma * d * d).sqrt()).collect();
    (trapezoid(&a, h), PI / 4.0 * trapezoid(&b, h) - PI)
}
