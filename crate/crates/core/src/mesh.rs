//! Grids for the film interval `[-1, 1]` and the reference rectangle
//! `[-1, 1] x [1, 2]`, the film profile living on the 1-D grid, and the
//! flattening map between the physical gap `{u(z) + 1 < r < 2}` and the
//! rectangle.

use crate::error::{Error, Result};

/// Uniform grid on `[-1, 1]` with an odd node count, so `z = 0` is a node and
/// node `i` mirrors node `n - 1 - i` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    h: f64,
}

impl Grid1D {
    pub const MIN_NODES: usize = 5;

    pub fn new(n_z: usize) -> Result<Self> {
        if n_z < Self::MIN_NODES || n_z % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "n_z must be odd and >= {}, got {n_z}",
                Self::MIN_NODES
            )));
        }
        let m = (n_z - 1) as f64;
        // Integer numerator keeps z_{n-1-i} = -z_i bit for bit.
        let nodes = (0..n_z)
            .map(|i| (2.0 * i as f64 - m) / m)
            .collect::<Vec<_>>();
        Ok(Self { nodes, h: 2.0 / m })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn z(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node mirrored through `z = 0`.
    pub fn mirror(&self, i: usize) -> usize {
        self.nodes.len() - 1 - i
    }
}

/// Tensor grid on `[-1, 1] x [1, 2]`. The z-nodes are those of the film grid.
///
/// Nodes are numbered row-major by z then r: `(i, j) -> i * n_r + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMesh {
    z: Grid1D,
    r: Vec<f64>,
    h_r: f64,
}

impl RectMesh {
    pub fn new(z: Grid1D, n_r: usize) -> Result<Self> {
        if n_r < 3 {
            return Err(Error::InvalidArgument(format!(
                "n_r must be >= 3, got {n_r}"
            )));
        }
        let m = (n_r - 1) as f64;
        let mut r = (0..n_r).map(|j| 1.0 + j as f64 / m).collect::<Vec<_>>();
        r[n_r - 1] = 2.0;
        Ok(Self { z, r, h_r: 1.0 / m })
    }

    pub fn with_sizes(n_z: usize, n_r: usize) -> Result<Self> {
        Self::new(Grid1D::new(n_z)?, n_r)
    }

    pub fn z_grid(&self) -> &Grid1D {
        &self.z
    }

    pub fn n_z(&self) -> usize {
        self.z.len()
    }

    pub fn n_r(&self) -> usize {
        self.r.len()
    }

    pub fn h_z(&self) -> f64 {
        self.z.h()
    }

    pub fn h_r(&self) -> f64 {
        self.h_r
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn r(&self, j: usize) -> f64 {
        self.r[j]
    }

    pub fn len(&self) -> usize {
        self.n_z() * self.n_r()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.r.len() + j
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n_z() || j + 1 == self.n_r()
    }
}

/// Film deflection on the 1-D grid. The film radius is `u + 1`.
///
/// First and second derivatives are cached: central differences at interior
/// nodes, one-sided second-order stencils at the two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmProfile {
    grid: Grid1D,
    u: Vec<f64>,
    u_z: Vec<f64>,
    u_zz: Vec<f64>,
}

impl FilmProfile {
    /// Endpoint values must be exactly zero.
    pub fn new(grid: Grid1D, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "profile has {} values for a grid of {} nodes",
                u.len(),
                grid.len()
            )));
        }
        if u[0] != 0.0 || u[u.len() - 1] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "profile endpoints must be 0, got {} and {}",
                u[0],
                u[u.len() - 1]
            )));
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite deflection at node {i}"
            )));
        }
        let (u_z, u_zz) = differences(&u, grid.h());
        Ok(Self { grid, u, u_z, u_zz })
    }

    /// Samples `f` at the nodes; endpoint values are forced to zero.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = grid.len();
        let mut u = grid.nodes().iter().map(|&z| f(z)).collect::<Vec<_>>();
        u[0] = 0.0;
        u[n - 1] = 0.0;
        Self::new(grid, u)
    }

    pub fn zero(grid: Grid1D) -> Self {
        let n = grid.len();
        Self::new(grid, vec![0.0; n]).expect("zero profile is valid")
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn u_z(&self) -> &[f64] {
        &self.u_z
    }

    pub fn u_zz(&self) -> &[f64] {
        &self.u_zz
    }

    pub fn into_values(self) -> Vec<f64> {
        self.u
    }

    pub fn min(&self) -> (usize, f64) {
        self.u
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc })
    }

    pub fn max(&self) -> (usize, f64) {
        self.u
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc })
    }

    /// Strictly inside `(-1, 1)` at every node.
    pub fn is_admissible(&self) -> bool {
        self.u.iter().all(|&x| x > -1.0 && x < 1.0)
    }

    /// First node whose distance to `-1` or `+1` is below `eps`.
    pub fn check_margin(&self, eps: f64) -> Result<()> {
        for (i, &x) in self.u.iter().enumerate() {
            if !(x + 1.0 >= eps && 1.0 - x >= eps) {
                return Err(Error::Degenerate {
                    node: i,
                    z: self.grid.z(i),
                    value: x,
                });
            }
        }
        Ok(())
    }

    /// Physical radius of reference point `r_ref` above node `i`.
    pub fn physical_radius(&self, i: usize, r_ref: f64) -> Result<f64> {
        map_to_physical(self.u[i], r_ref)
    }
}

/// Central differences in the interior, one-sided second-order stencils at
/// the endpoints. Sums are grouped so mirrored nodes see mirrored operands.
fn differences(u: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        d2[i] = ((u[i - 1] + u[i + 1]) - 2.0 * u[i]) / (h * h);
    }
    let l = n - 1;
    d1[0] = -((3.0 * u[0] - 4.0 * u[1]) + u[2]) / (2.0 * h);
    d1[l] = ((3.0 * u[l] - 4.0 * u[l - 1]) + u[l - 2]) / (2.0 * h);
    d2[0] = (((2.0 * u[0] - 5.0 * u[1]) + 4.0 * u[2]) - u[3]) / (h * h);
    d2[l] = (((2.0 * u[l] - 5.0 * u[l - 1]) + 4.0 * u[l - 2]) - u[l - 3]) / (h * h);
    (d1, d2)
}

/// Inverse flattening map: reference radius `r_ref in [1, 2]` to the physical
/// radius above a film point with deflection `v`.
pub fn map_to_physical(v: f64, r_ref: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&r_ref) {
        return Err(Error::InvalidArgument(format!(
            "reference radius {r_ref} outside [1, 2]"
        )));
    }
    Ok(2.0 * v + r_ref * (1.0 - v))
}

/// Flattening map: physical radius `r in [v + 1, 2]` to the reference radius.
pub fn map_to_reference(v: f64, r: f64) -> f64 {
    2.0 - (2.0 - r) / (1.0 - v)
}
