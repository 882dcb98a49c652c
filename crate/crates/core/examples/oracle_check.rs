//! Runs the verification battery on the shipped savings config: contraction
//! modulus, rate audit, restart agreement and the truncated-model oracle.

use bellman_transform::config::{build_model, RunConfig};
use bellman_transform::diagnostics::{rate_audit, restart_agreement, truncated_oracle_check};
use bellman_transform::operator::{ell_lower_bound, estimate_contraction_modulus};
use bellman_transform::program::{check_assumption_ws, unit_kappa};
use bellman_transform::{solve_fixed_point, GFunction, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/savings.json");
    let config = RunConfig::load(&path)?;
    let model = build_model(&config.model)?;
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp))?;
    let settings = SolverSettings::with_tol(1e-10);

    let m = estimate_contraction_modulus(dp, &w, 200, 1)?;
    println!("observed modulus {:.6} (bound {})", m.max_ratio, w.modulus_bound());

    let report = solve_fixed_point(dp, &w, &GFunction::zeros(dp), &settings)?;
    let audit = rate_audit(&report, &w);
    println!("rate audit passed: {} (worst {:?})", audit.passed, audit.worst);

    let starts = [GFunction::zeros(dp), GFunction::constant(dp, 10.0), ell_lower_bound(dp)?];
    let r = restart_agreement(dp, &w, &starts, &settings)?;
    println!("restart spread {:.2e} <= {:.2e}", r.max_spread, r.bound);

    for floor in [-10.0, -50.0, -200.0] {
        let o = truncated_oracle_check(dp, floor, &w, 1e-8)?;
        println!(
            "floor {floor}: value gap {:.1e}, policy agreement {}",
            o.value_deviation, o.policy_agreement
        );
    }
    Ok(())
}
