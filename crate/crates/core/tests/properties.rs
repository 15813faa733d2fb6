use proptest::prelude::*;

use soapfilm::diagnostics;
use soapfilm::elliptic;
use soapfilm::force;
use soapfilm::linalg::SolverConfig;
use soapfilm::mesh::{map_to_physical, map_to_reference, FilmProfile, Grid1D, RectMesh};

/// Smooth profile with zero ends from four mode amplitudes, scaled so that
/// `max |u| = amp`. Even profiles use `cos(k pi z / 2)`, odd `k`, which is
/// mirror-symmetric bit for bit on the node set.
fn profile(grid: &Grid1D, modes: &[f64], amp: f64, even: bool) -> FilmProfile {
    let raw = |z: f64| -> f64 {
        modes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if even {
                    a * (0.5 * (2 * k + 1) as f64 * std::f64::consts::PI * z).cos()
                } else {
                    a * (0.5 * (k + 1) as f64 * std::f64::consts::PI * (z + 1.0)).sin()
                }
            })
            .sum()
    };
    let peak = grid.nodes().iter().fold(1e-9f64, |m, &z| m.max(raw(z).abs()));
    FilmProfile::from_fn(grid.clone(), |z| amp * raw(z) / peak).unwrap()
}

fn modes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn determinant_is_sigma_squared(m in modes(), amp in 0.0f64..0.98, sigma in prop::sample::select(vec![0.5, 1.0, 1.5431, 3.0])) {
        let mesh = RectMesh::with_sizes(33, 17).unwrap();
        let v = profile(mesh.z_grid(), &m, amp, false);
        let c = elliptic::assemble_coefficients(&v, sigma, &mesh).unwrap();
        let rep = elliptic::check_ellipticity(&c);
        prop_assert!(rep.det_residual <= 1e-12 * sigma * sigma, "{:?}", rep);
        prop_assert!(rep.alpha_min > 0.0);
    }

    #[test]
    fn radial_map_round_trips(v in -0.99f64..0.99, t in 0.0f64..=1.0) {
        let r = (v + 1.0) + t * (1.0 - v);
        let back = map_to_physical(v, map_to_reference(v, r).clamp(1.0, 2.0)).unwrap();
        prop_assert!((back - r).abs() <= 1e-14, "{} vs {}", back, r);
    }

    #[test]
    fn arctan_inequality_holds(m in modes(), amp in 0.0f64..0.98, sigma in 0.2f64..4.0) {
        let g = Grid1D::new(65).unwrap();
        let u = profile(&g, &m, amp, false);
        let (lhs, rhs) = diagnostics::arctan_lower_bound_check(&u, sigma);
        prop_assert!(lhs >= rhs, "{} < {}", lhs, rhs);
    }

    #[test]
    fn energy_is_bounded_below(m in modes(), amp in 0.0f64..0.999) {
        let g = Grid1D::new(65).unwrap();
        let u = profile(&g, &m, amp, false);
        prop_assert!(diagnostics::energy(&u).unwrap() >= -2.0 * std::f64::consts::LN_2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn even_profiles_give_even_nonnegative_force(m in modes(), amp in 0.0f64..0.9, sigma in 0.5f64..3.0) {
        let mesh = RectMesh::with_sizes(33, 33).unwrap();
        let v = profile(mesh.z_grid(), &m, amp, true);
        prop_assert!(diagnostics::symmetry_defect(&v) <= 1e-15);
        let phi = elliptic::solve_potential(&v, sigma, &mesh, &SolverConfig::default()).unwrap();
        let g = force::electrostatic_force(&v, &phi, sigma).unwrap().g;
        let n = g.len();
        for i in 0..n {
            prop_assert!(g[i] >= 0.0);
            prop_assert!((g[i] - g[n - 1 - i]).abs() <= 1e-12 * g[i].abs().max(1.0), "node {}", i);
        }
    }
}
