//! Job search with persistent and transitory wage components; prints the
//! reservation wage for each persistent state.

use bellman_transform::discretize::{discretize_ar1_log, lognormal_quadrature};
use bellman_transform::models::{build_job_search, CrraUtility, JobSearchSpec, ACCEPT};
use bellman_transform::program::{check_assumption_ws, unit_kappa};
use bellman_transform::{solve_fixed_point, GFunction, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = JobSearchSpec {
        beta: 0.95,
        utility: CrraUtility::new(2.0)?,
        z_chain: discretize_ar1_log(0.9, 0.1, 3)?,
        xi: lognormal_quadrature(0.0, 0.25, 15)?,
        zeta: lognormal_quadrature(-1.0, 0.25, 3)?,
    };
    let model = build_job_search(&spec)?;
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp))?;
    let report = solve_fixed_point(dp, &w, &GFunction::zeros(dp), &SolverSettings::with_tol(1e-10))?;

    let (nz, nx, nc) = model.shape();
    let mid_c = nc / 2;
    for j in 0..nz {
        let reservation = (0..nx)
            .map(|k| model.state_index(j, k, mid_c))
            .filter(|&x| report.policy.action(x) == ACCEPT)
            .map(|x| dp.states().point(x).coords[0])
            .fold(f64::INFINITY, f64::min);
        println!("z = {:.4}: accept wages >= {reservation:.4}", spec.z_chain.states()[j]);
    }
    Ok(())
}
