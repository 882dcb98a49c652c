//! AR(1) chain and lognormal quadrature building blocks.

use bellman_transform::discretize::{discretize_ar1_log, expected_utility_on_rule, lognormal_quadrature};
use bellman_transform::models::CrraUtility;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = discretize_ar1_log(0.9, 0.1, 5)?;
    println!("income levels: {:?}", chain.states());
    for row in chain.transition() {
        println!("  {}", row.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(" "));
    }

    let (mu, sigma) = (0.0, 0.2);
    let rule = lognormal_quadrature(mu, sigma, 11)?;
    println!("E[xi] = {:.8} (exact {:.8})", rule.expect(|x| x), (mu + sigma * sigma / 2.0f64).exp());
    let u = CrraUtility::new(2.0)?;
    println!("E u(xi) = {}", expected_utility_on_rule(&u, &rule));
    Ok(())
}
