use crate::discretize::{MarkovChain, QuadratureRule};
use crate::ext_real::ExtReal;

use super::savings::{assemble_wealth_program, SavingsModel};
use super::{check_beta, check_grid, min_report, BuildError, CrraUtility, LowerBoundReport};

/// Savings with capital income risk: `w′ = R′ s + y′` where
/// `R′ = h_R(z′, ξ′) = R_{z′} ξ′` and `y′ = h_y(z′, ζ′) = y_{z′} ζ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSavingsSpec {
    pub beta: f64,
    pub utility: CrraUtility,
    pub z_chain: MarkovChain,
    /// `R_z`, one per state of `z_chain`.
    pub return_levels: Vec<f64>,
    /// Multiplicative return shock ξ.
    pub return_shock: QuadratureRule,
    /// `y_z`, one per state of `z_chain`.
    pub income_levels: Vec<f64>,
    /// Multiplicative income shock ζ.
    pub income_shock: QuadratureRule,
    pub wealth_grid: Vec<f64>,
}

impl CirSavingsSpec {
    /// `min_z E_z u(y′)` over the chain and the income-shock nodes.
    pub fn lower_bound_condition(&self) -> LowerBoundReport {
        let chain = &self.z_chain;
        let per_state: Vec<ExtReal> = (0..chain.len())
            .map(|i| {
                let mut acc = ExtReal::ZERO;
                for jn in 0..chain.len() {
                    let p = chain.prob(i, jn);
                    if p == 0.0 {
                        continue;
                    }
                    for (zeta, q) in self.income_shock.iter() {
                        if q > 0.0 {
                            let y = self.income_levels.get(jn).copied().unwrap_or(f64::NAN) * zeta;
                            let u = if y.is_nan() { ExtReal::NegInf } else { self.utility.eval(y) };
                            acc = acc + u.scale(p * q);
                        }
                    }
                }
                acc
            })
            .collect();
        min_report("min_z E_z u(y') > -inf", &per_state, chain.states())
    }
}

/// Builds the capital-income-risk savings problem on states `(w, z)`.
/// The wealth grid is used as given.
pub fn build_savings_cir(spec: &CirSavingsSpec) -> Result<CirSavingsModel, BuildError> {
    check_beta(spec.beta)?;
    let nz = spec.z_chain.len();
    if spec.return_levels.len() != nz || spec.income_levels.len() != nz {
        return Err(BuildError::InvalidParameter(format!(
            "need {nz} return and income levels, got {} and {}",
            spec.return_levels.len(),
            spec.income_levels.len()
        )));
    }
    for (z_state, &r) in spec.return_levels.iter().enumerate() {
        for (node, &xi) in spec.return_shock.nodes().iter().enumerate() {
            let value = r * xi;
            if !(value > 0.0 && value.is_finite()) {
                return Err(BuildError::ReturnNonpositive { z_state, node, value });
            }
        }
    }
    let condition = spec.lower_bound_condition();
    if !condition.passed {
        return Err(BuildError::ConditionUBarViolated(condition));
    }
    check_grid("wealth grid", &spec.wealth_grid)?;
    if spec.wealth_grid[0] < 0.0 {
        return Err(BuildError::InvalidParameter("wealth grid must be nonnegative".into()));
    }
    let chain = &spec.z_chain;
    assemble_wealth_program(
        spec.beta,
        &spec.utility,
        spec.wealth_grid.clone(),
        chain.states().to_vec(),
        "z",
        condition,
        |j, s, out| {
            for jn in 0..nz {
                let p = chain.prob(j, jn);
                if p == 0.0 {
                    continue;
                }
                for (xi, qx) in spec.return_shock.iter() {
                    for (zeta, qz) in spec.income_shock.iter() {
                        let r = spec.return_levels[jn] * xi;
                        let y = spec.income_levels[jn] * zeta;
                        let mass = p * qx * qz;
                        if mass > 0.0 {
                            out.push((r * s + y, jn, mass));
                        }
                    }
                }
            }
        },
    )
}

/// Same layout as the plain savings model with `z` in place of `y`.
pub type CirSavingsModel = SavingsModel;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_savings, SavingsSpec};

    fn cir(return_shock: QuadratureRule) -> CirSavingsSpec {
        CirSavingsSpec {
            beta: 0.9,
            utility: CrraUtility::new(2.0).unwrap(),
            z_chain: MarkovChain::iid(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap(),
            return_levels: vec![1.01, 1.02],
            return_shock,
            income_levels: vec![0.5, 1.5],
            income_shock: QuadratureRule::point_mass(1.0),
            wealth_grid: vec![0.5, 1.0, 1.5, 2.0, 3.0],
        }
    }

    #[test]
    fn nonpositive_return_is_rejected() {
        let rule = QuadratureRule::new(vec![-0.1, 1.0], vec![0.1, 0.9]).unwrap();
        assert!(matches!(
            build_savings_cir(&cir(rule)),
            Err(BuildError::ReturnNonpositive { node: 0, .. })
        ));
    }

    #[test]
    fn point_mass_kernel_matches_plain_savings() {
        let spec = SavingsSpec {
            beta: 0.9,
            gross_return: 1.02,
            utility: CrraUtility::new(2.0).unwrap(),
            income_chain: MarkovChain::iid(vec![0.5, 1.5], vec![0.5, 0.5]).unwrap(),
            wealth_grid: vec![0.5, 1.0, 2.0, 3.0],
        };
        let plain = build_savings(&spec).unwrap();
        let mut c = cir(QuadratureRule::point_mass(1.0));
        c.return_levels = vec![1.02, 1.02];
        c.wealth_grid = plain.wealth_grid().to_vec();
        let risky = build_savings_cir(&c).unwrap();
        let (a, b) = (plain.dp(), risky.dp());
        assert_eq!(a.n_pairs(), b.n_pairs());
        for pair in 0..a.n_pairs() {
            assert_eq!(a.kernel().row(pair), b.kernel().row(pair));
            assert_eq!(a.reward(pair), b.reward(pair));
        }
    }

    #[test]
    fn zero_income_level_fails_condition() {
        let mut c = cir(QuadratureRule::point_mass(1.0));
        c.income_levels = vec![0.0, 1.0];
        let rep = c.lower_bound_condition();
        assert!(!rep.passed);
        assert!(matches!(build_savings_cir(&c), Err(BuildError::ConditionUBarViolated(_))));
    }
}
