//! Sovereign default with permanent autarky: where does the borrower default?

use bellman_transform::discretize::{discretize_ar1_log, lognormal_quadrature};
use bellman_transform::models::{build_default, CrraUtility, DefaultSpec, OutputMap};
use bellman_transform::program::{check_assumption_ws, unit_kappa};
use bellman_transform::{solve_fixed_point, GFunction, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = 0.5;
    let spec = DefaultSpec {
        beta: 0.9,
        utility: CrraUtility::new(2.0)?,
        gross_return: 1.02,
        borrowing_limit: b,
        z_chain: discretize_ar1_log(0.8, 0.1, 3)?,
        output_map: OutputMap::Multiplicative,
        xi: lognormal_quadrature(0.0, 0.05, 3)?,
        asset_grid: (0..16).map(|i| -b + i as f64 * 0.1).collect(),
    };
    let model = build_default(&spec)?;
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp))?;
    let report = solve_fixed_point(dp, &w, &GFunction::zeros(dp), &SolverSettings::with_tol(1e-10))?;

    let (na, nz, _) = model.shape();
    for j in 0..nz {
        let defaults: Vec<String> = (0..na)
            .filter(|&i| report.policy.action(model.state_index(i, j, 1)) == model.default_action())
            .map(|i| format!("{:.1}", spec.asset_grid[i]))
            .collect();
        println!("z = {:.4}: default at assets [{}]", spec.z_chain.states()[j], defaults.join(", "));
    }
    Ok(())
}
