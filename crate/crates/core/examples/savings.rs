//! Income fluctuation problem: solve for g*, recover v* and the savings rule.

use bellman_transform::discretize::discretize_ar1_log;
use bellman_transform::models::{build_savings, CrraUtility, SavingsSpec};
use bellman_transform::program::{check_assumption_ws, unit_kappa};
use bellman_transform::{solve_fixed_point, GFunction, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SavingsSpec {
        beta: 0.95,
        gross_return: 1.02,
        utility: CrraUtility::new(2.0)?,
        income_chain: discretize_ar1_log(0.9, 0.1, 3)?,
        wealth_grid: (1..=30).map(|i| i as f64 / 3.0).collect(),
    };
    println!("{}", spec.lower_bound_condition());
    let model = build_savings(&spec)?;
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp))?;
    let report = solve_fixed_point(dp, &w, &GFunction::zeros(dp), &SolverSettings::with_tol(1e-10))?;
    println!("converged in {} iterations", report.iterations);

    let grid = model.wealth_grid();
    let mid = model.exogenous_levels().len() / 2;
    println!("{:>8} {:>10} {:>10}", "wealth", "v*", "saving");
    for iw in (0..grid.len()).step_by(grid.len() / 8) {
        let x = model.state_index(iw, mid);
        let a = report.policy.action(x);
        println!("{:8.3} {:10.4} {:10.3}", grid[iw], report.v_star.get(x).to_f64(), dp.actions().point(a).coords[0]);
    }
    Ok(())
}
