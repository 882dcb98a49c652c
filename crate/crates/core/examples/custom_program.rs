//! A hand-built program with a -inf reward and a non-unit weight.

use bellman_transform::program::{check_assumption_ws, ActionGrid, GridPoint, StateGrid};
use bellman_transform::{solve_fixed_point, ExtReal, GFunction, ProgramBuilder, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // three states on a line; "risky" pays more but can move right, where κ grows
    let states = StateGrid::new((0..3).map(|i| GridPoint::new(vec![i as f64])).collect(), vec!["x".into()])?;
    let actions = ActionGrid::discrete(&["safe", "risky"])?;
    let mut b = ProgramBuilder::new(states, actions, 0.6);
    b.push(0, 0, ExtReal::Finite(0.0), vec![(0, 1.0)])?;
    b.push(0, 1, ExtReal::Finite(1.0), vec![(0, 0.5), (1, 0.5)])?;
    b.push(1, 0, ExtReal::Finite(0.5), vec![(0, 1.0)])?;
    b.push(1, 1, ExtReal::Finite(2.0), vec![(1, 0.5), (2, 0.5)])?;
    b.push(2, 0, ExtReal::Finite(1.0), vec![(1, 1.0)])?;
    b.push(2, 1, ExtReal::NegInf, vec![(2, 1.0)])?;
    let dp = b.build()?;

    let kappa = [1.0, 2.0, 3.0];
    let w = check_assumption_ws(&dp, &kappa)?;
    println!("d = {}, alpha = {}, alpha*beta = {}", w.d(), w.alpha(), w.modulus_bound());
    let report = solve_fixed_point(&dp, &w, &GFunction::zeros(&dp), &SolverSettings::with_tol(1e-12))?;
    for x in 0..dp.n_states() {
        let a = report.policy.action(x);
        println!(
            "state {x}: v* = {:.6}, choose {}",
            report.v_star.get(x).to_f64(),
            dp.actions().point(a).tag.as_deref().unwrap_or("?")
        );
    }
    Ok(())
}
