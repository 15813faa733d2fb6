//! Stationary zero-voltage profiles: `u(z) = cosh(c z) / cosh(c) - 1` with
//! `sigma = cosh(c) / c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{FilmProfile, Grid1D};

/// Absolute bracket width at which bisection stops.
const BISECT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Smaller `c`: the wider-throated catenoid.
    Small,
    Large,
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "small" => Ok(Branch::Small),
            "large" => Ok(Branch::Large),
            other => Err(Error::InvalidArgument(format!(
                "unknown catenoid branch `{other}` (expected small or large)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Catenoid {
    pub c: f64,
    pub sigma: f64,
}

impl Catenoid {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("catenoid parameter must be positive, got {c}")));
        }
        Ok(Self { c, sigma: c.cosh() / c })
    }

    pub fn for_sigma(sigma: f64, branch: Branch) -> Result<Self> {
        let (small, large) = catenoid_roots(sigma).ok_or(Error::NoCatenoid {
            sigma,
            sigma_min: sigma_min().1,
        })?;
        Ok(match branch {
            Branch::Small => small,
            Branch::Large => large,
        })
    }

    /// Film radius at `z = 0`, `1 / cosh(c)`.
    pub fn throat(&self) -> f64 {
        1.0 / self.c.cosh()
    }

    pub fn value(&self, z: f64) -> f64 {
        (self.c * z).cosh() / self.c.cosh() - 1.0
    }

    pub fn slope(&self, z: f64) -> f64 {
        self.c * (self.c * z).sinh() / self.c.cosh()
    }

    pub fn profile(&self, grid: &Grid1D) -> FilmProfile {
        eval_catenoid(self.c, grid)
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(argmin, min)` of `cosh(c)/c` over `c > 0`; the argmin solves `c tanh(c) = 1`.
pub fn sigma_min() -> (f64, f64) {
    let c = bisect(0.5, 2.0, |c| c * c.tanh() - 1.0);
    (c, c.cosh() / c)
}

/// Both parameters `c` with `cosh(c)/c = sigma`, smaller first. Returns the
/// double root at the minimum and `None` below it.
pub fn catenoid_roots(sigma: f64) -> Option<(Catenoid, Catenoid)> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return None;
    }
    let (c_star, s_min) = sigma_min();
    if sigma < s_min {
        return None;
    }
    let mk = |c: f64| Catenoid { c, sigma };
    if sigma - s_min <= 1e-12 * s_min {
        return Some((mk(c_star), mk(c_star)));
    }
    let f = |c: f64| c.cosh() - sigma * c;
    // cosh(c)/c > 1/c, so c = 1/(2 sigma) lies above the curve's level.
    let lo = (0.5 / sigma).min(0.5 * c_star);
    let mut hi = 2.0 * c_star;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    Some((mk(bisect(lo, c_star, f)), mk(bisect(c_star, hi, f))))
}

pub fn eval_catenoid(c: f64, grid: &Grid1D) -> FilmProfile {
    let ch = c.cosh();
    FilmProfile::from_fn(grid.clone(), |z| (c * z).cosh() / ch - 1.0)
        .expect("catenoid samples are finite")
}

/// Discrete `sigma d_z arctan(sigma d_z u) - 1/(u+1)` at interior nodes in
/// flux form; vanishes up to `O(h^2)` on a catenoid.
pub fn stationary_residual(u: &FilmProfile, sigma: f64) -> Vec<f64> {
    let h = u.grid().h();
    let v = u.values();
    let n = v.len();
    let flux = |i: usize| (sigma * (v[i + 1] - v[i]) / h).atan();
    let mut res = vec![0.0; n];
    for i in 1..n - 1 {
        res[i] = sigma * (flux(i) - flux(i - 1)) / h - 1.0 / (v[i] + 1.0);
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimum_of_cosh_over_c() {
        let (c, s) = sigma_min();
        assert!((c - 1.199_678_640_257_734).abs() < 1e-10, "c* = {c}");
        assert!((s - 1.508_879_561_538_32).abs() < 1e-10, "min = {s}");
        assert!(1.0f64.cosh() > s);
    }

    #[test]
    fn roots_for_cosh_one() {
        let sigma = 1.0f64.cosh();
        let (a, b) = catenoid_roots(sigma).unwrap();
        assert!((a.c - 1.0).abs() < 1e-12);
        // Independent check: mpmath findroot gives 1.424293065481615.
        assert!((b.c - 1.424_293_065_481_615).abs() < 1e-10, "c_large = {}", b.c);
        for cat in [a, b] {
            assert!((sigma * cat.c - cat.c.cosh()).abs() <= 1e-12 * cat.c.cosh());
            assert!(cat.throat() > 0.0 && cat.throat() < 1.0);
        }
    }

    #[test]
    fn no_roots_below_minimum() {
        assert!(catenoid_roots(1.0).is_none());
        assert!(matches!(
            Catenoid::for_sigma(1.2, Branch::Small),
            Err(Error::NoCatenoid { .. })
        ));
    }

    #[test]
    fn double_root_at_minimum() {
        let (c, s) = sigma_min();
        let (a, b) = catenoid_roots(s).unwrap();
        assert_eq!(a.c, b.c);
        assert!((a.c - c).abs() < 1e-12);
    }

    #[test]
    fn catenoid_values() {
        let g = Grid1D::new(5).unwrap();
        let p = eval_catenoid(1.0, &g);
        assert!((p.values()[2] + 0.351_945_726_336_114_6).abs() < 1e-15);
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.values()[4], 0.0);
        let flat = eval_catenoid(1e-8, &g);
        assert!(flat.values().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn catenoid_is_discretely_stationary() {
        let sigma = 1.0f64.cosh();
        let errs: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&n| {
                let g = Grid1D::new(n).unwrap();
                stationary_residual(&eval_catenoid(1.0, &g), sigma)
                    .iter()
                    .fold(0.0f64, |m, r| m.max(r.abs()))
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(order >= 1.8, "errors {errs:?}");
    }

    #[test]
    fn branch_parses() {
        assert_eq!("small".parse::<Branch>().unwrap(), Branch::Small);
        assert!("medium".parse::<Branch>().is_err());
    }
}
