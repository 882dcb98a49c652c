//! Savings with stochastic returns and income; checks the g* monotonicity
//! that the transformed operator preserves.

use bellman_transform::diagnostics::first_savings_decrease;
use bellman_transform::discretize::{discretize_ar1_log, lognormal_quadrature};
use bellman_transform::models::{build_savings_cir, CirSavingsSpec, CrraUtility};
use bellman_transform::program::{check_assumption_ws, unit_kappa};
use bellman_transform::{solve_fixed_point, GFunction, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CirSavingsSpec {
        beta: 0.95,
        utility: CrraUtility::new(2.0)?,
        z_chain: discretize_ar1_log(0.8, 0.1, 3)?,
        return_levels: vec![1.0, 1.01, 1.02],
        return_shock: lognormal_quadrature(0.0, 0.05, 3)?,
        income_levels: vec![0.8, 1.0, 1.25],
        income_shock: lognormal_quadrature(0.0, 0.1, 3)?,
        wealth_grid: (1..=30).map(|i| i as f64 / 3.0).collect(),
    };
    let model = build_savings_cir(&spec)?;
    for w in model.warnings() {
        println!("warning: {w:?}");
    }
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp))?;
    println!("alpha = {}, modulus bound = {}", w.alpha(), w.modulus_bound());
    let report = solve_fixed_point(dp, &w, &GFunction::zeros(dp), &SolverSettings::with_tol(1e-10))?;
    match first_savings_decrease(dp, &report.g_star, 1e-12) {
        None => println!("g* is nondecreasing in savings at every state"),
        Some((x, p)) => println!("g* decreases at state {x}, pair {p}"),
    }
    Ok(())
}
