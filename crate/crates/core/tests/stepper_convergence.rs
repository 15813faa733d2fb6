use soapfilm::catenoid::{Branch, Catenoid};
use soapfilm::diagnostics;
use soapfilm::force;
use soapfilm::linalg::SolverConfig;
use soapfilm::mesh::{FilmProfile, Grid1D, RectMesh};
use soapfilm::stepper::{self, Problem, RunOptions, StepperConfig};

const SIGMA: f64 = 1.5;

fn initial(z: f64) -> f64 {
    0.25 * (1.0 - z * z) * (1.0 + 0.3 * z)
}

fn evolve(n_z: usize, n_r: usize, lambda: f64, dt: f64, t_end: f64, u0: impl Fn(f64) -> f64) -> FilmProfile {
    evolve_at(SIGMA, n_z, n_r, lambda, dt, t_end, u0)
}

fn evolve_at(
    sigma: f64,
    n_z: usize,
    n_r: usize,
    lambda: f64,
    dt: f64,
    t_end: f64,
    u0: impl Fn(f64) -> f64,
) -> FilmProfile {
    let p = Problem::new(sigma, lambda, RectMesh::with_sizes(n_z, n_r).unwrap()).unwrap();
    let u = FilmProfile::from_fn(p.grid().clone(), u0).unwrap();
    let opts = RunOptions { t_end, sample_interval: 1.0, keep_profiles: false };
    let traj = stepper::run(&p, u, &StepperConfig::fixed(dt), &opts).unwrap();
    assert!(traj.outcome.is_completed(), "{:?}", traj.outcome);
    traj.final_state.u
}

fn max_diff_on_coarse(coarse: &FilmProfile, fine: &FilmProfile) -> f64 {
    let stride = (fine.len() - 1) / (coarse.len() - 1);
    coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| (x - fine.values()[i * stride]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn first_order_in_time() {
    let runs: Vec<FilmProfile> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| evolve(65, 5, 0.0, dt, 0.25, initial))
        .collect();
    let d1 = max_diff_on_coarse(&runs[0], &runs[1]);
    let d2 = max_diff_on_coarse(&runs[1], &runs[2]);
    let order = (d1 / d2).log2();
    assert!(order >= 1.0 - 0.05 && order < 1.5, "diffs {d1:e} {d2:e}, order {order}");
}

#[test]
fn second_order_in_space_with_dt_proportional_to_h_squared() {
    let ns = [17usize, 33, 65, 129];
    let runs: Vec<FilmProfile> = ns
        .iter()
        .map(|&n| {
            let h = Grid1D::new(n).unwrap().h();
            evolve(n, 5, 0.0, 0.5 * h * h, 0.25, initial)
        })
        .collect();
    let diffs: Vec<f64> = runs.windows(2).map(|w| max_diff_on_coarse(&w[0], &w[1])).collect();
    let order = (diffs[1] / diffs[2]).log2();
    assert!(order >= 1.8, "diffs {diffs:?}, order {order}");
}

#[test]
fn continuous_dependence_on_initial_data() {
    let sigma = 2.0;
    let cat = Catenoid::for_sigma(sigma, Branch::Small).unwrap();
    let start = move |z: f64| cat.value(z) + 0.1 * (1.0 - z * z);
    let w = |z: f64| (1.0 - z * z) * (std::f64::consts::PI * z).cos();
    let base = evolve_at(sigma, 65, 17, 1.0, 1e-3, 0.1, start);
    let ks: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&delta| {
            let u = evolve_at(sigma, 65, 17, 1.0, 1e-3, 0.1, move |z| start(z) + delta * w(z));
            max_diff_on_coarse(&u, &base) / delta
        })
        .collect();
    let (lo, hi) = ks.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &k| (a.min(k), b.max(k)));
    assert!(hi < 10.0, "K = {ks:?}");
    assert!(hi / lo < 1.1, "K varies with delta: {ks:?}");
}

#[test]
fn energy_rate_forms_agree() {
    // The PDE-rate form and a finite difference of the energy over a small
    // step should agree to O(dt).
    let mesh = RectMesh::with_sizes(65, 33).unwrap();
    let p = Problem::new(SIGMA, 2.0, mesh.clone()).unwrap();
    let u = FilmProfile::from_fn(p.grid().clone(), initial).unwrap();
    let (rhs, _) = force::evaluate_rhs(&u, SIGMA, 2.0, &mesh, &SolverConfig::default()).unwrap();
    let rate = diagnostics::energy_rate(&u, &diagnostics::pde_rate(&u, SIGMA, &rhs.rhs)).unwrap();
    let mut errs = Vec::new();
    for dt in [1e-4, 5e-5] {
        let s = stepper::SimState::new(u.clone(), &StepperConfig::fixed(dt));
        let next = stepper::step(&s, &p, &StepperConfig::fixed(dt)).unwrap().state.u;
        let fd = (diagnostics::energy(&next).unwrap() - diagnostics::energy(&u).unwrap()) / dt;
        let via_diff = diagnostics::energy_rate(&u, &diagnostics::difference_rate(&u, &next, dt)).unwrap();
        errs.push(((fd - rate).abs(), (via_diff - rate).abs()));
    }
    for &(a, b) in &errs {
        assert!(a < 1e-2 * rate.abs().max(1.0) && b < 1e-2 * rate.abs().max(1.0), "{errs:?}, rate {rate}");
    }
    assert!(errs[1].0 < errs[0].0);
}
