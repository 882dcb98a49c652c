//! Builders for concrete decision problems: optimal savings, job search,
//! optimal default and savings with capital income risk.
//!
//! Each builder checks the model's own lower-bound condition on the
//! discretized shocks before assembling a [`DynamicProgram`].
//!
//! [`DynamicProgram`]: crate::program::DynamicProgram

mod cir;
mod default;
mod job_search;
mod savings;

pub use cir::{build_savings_cir, CirSavingsModel, CirSavingsSpec};
pub use default::{build_default, DefaultModel, DefaultSpec, OutputMap};
pub use job_search::{build_job_search, JobSearchModel, JobSearchSpec, ACCEPT, CONTINUE, EMPLOYED};
pub use savings::{build_savings, SavingsModel, SavingsSpec};

pub use crate::discretize::MarkovChain;

use thiserror::Error;

use crate::discretize::DiscretizeError;
use crate::ext_real::ExtReal;
use crate::program::ModelError;

/// `u(c) = (c^{1−γ} − 1) / (1 − γ)` with `γ > 1`; `u(c) = −∞` for `c ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrraUtility {
    gamma: f64,
}

impl CrraUtility {
    pub fn new(gamma: f64) -> Result<Self, BuildError> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(BuildError::InvalidParameter(format!(
                "risk aversion gamma = {gamma} must exceed 1"
            )));
        }
        Ok(CrraUtility { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, c: f64) -> ExtReal {
        if c <= 0.0 {
            ExtReal::NegInf
        } else {
            ExtReal::Finite((c.powf(1.0 - self.gamma) - 1.0) / (1.0 - self.gamma))
        }
    }

    /// `sup_c u(c) = 1 / (γ − 1)`.
    pub fn upper_bound(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }
}

/// Outcome of a model's lower-bound condition on its discretized shocks.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LowerBoundReport {
    pub condition: String,
    pub passed: bool,
    /// Smallest expected utility over exogenous states.
    pub min_value: ExtReal,
    /// Index of the exogenous state attaining the minimum.
    pub witness_state: usize,
    /// Level of that exogenous state.
    pub witness_value: f64,
}

impl std::fmt::Display for LowerBoundReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: min = {} at exogenous state {} (level {}) -> {}",
            self.condition,
            self.min_value,
            self.witness_state,
            self.witness_value,
            if self.passed { "pass" } else { "FAIL" }
        )
    }
}

/// Minimizes `per_state[i]` and reports the witness.
pub(crate) fn min_report(condition: &str, per_state: &[ExtReal], levels: &[f64]) -> LowerBoundReport {
    let (witness_state, min_value) = per_state
        .iter()
        .copied()
        .enumerate()
        .fold((0, per_state[0]), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    LowerBoundReport {
        condition: condition.to_string(),
        passed: min_value.is_finite(),
        min_value,
        witness_state,
        witness_value: levels[witness_state],
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("savings lower-bound condition violated: {0}")]
    ConditionUBarViolated(LowerBoundReport),
    #[error("job-search lower-bound condition violated: {0}")]
    ConditionUp2Violated(LowerBoundReport),
    #[error("default lower-bound condition violated: {0}")]
    ConditionOdbbViolated(LowerBoundReport),
    #[error("state {state} has an empty continuation set (R(w + y) < -b)")]
    EmptyFeasibleSet { state: usize },
    #[error("gross return {value} <= 0 at exogenous state {z_state}, shock node {node}")]
    ReturnNonpositive { z_state: usize, node: usize, value: f64 },
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl BuildError {
    pub fn condition_report(&self) -> Option<&LowerBoundReport> {
        match self {
            BuildError::ConditionUBarViolated(r)
            | BuildError::ConditionUp2Violated(r)
            | BuildError::ConditionOdbbViolated(r) => Some(r),
            _ => None,
        }
    }
}

/// Non-fatal builder diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum BuildWarning {
    /// Successor wealth above the top grid point was clamped to it.
    GridTruncation {
        /// Feasible pairs with some clamped successor mass.
        pairs_affected: usize,
        /// Largest clamped probability mass in a single row.
        max_mass: f64,
    },
}

/// Any of the four model specifications.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Savings(SavingsSpec),
    JobSearch(JobSearchSpec),
    Default(DefaultSpec),
    SavingsCir(CirSavingsSpec),
}

/// Evaluates the lower-bound condition that the model's builder requires.
pub fn verify_lower_bound_condition(spec: &ModelSpec) -> LowerBoundReport {
    match spec {
        ModelSpec::Savings(s) => s.lower_bound_condition(),
        ModelSpec::JobSearch(s) => s.lower_bound_condition(),
        ModelSpec::Default(s) => s.lower_bound_condition(),
        ModelSpec::SavingsCir(s) => s.lower_bound_condition(),
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<(), BuildError> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(BuildError::InvalidParameter(format!("beta = {beta} not in (0, 1)")))
    }
}

pub(crate) fn check_grid(name: &str, grid: &[f64]) -> Result<(), BuildError> {
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(BuildError::InvalidParameter(format!(
            "{name} must be a nonempty strictly increasing list of reals"
        )));
    }
    Ok(())
}

/// Index of the grid point nearest to `x`; values beyond the ends clamp.
/// Returns `(index, clamped_above)`.
pub(crate) fn project_nearest(grid: &[f64], x: f64) -> (usize, bool) {
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last, x > grid[last]);
    }
    if x <= grid[0] {
        return (0, false);
    }
    let hi = grid.partition_point(|&g| g <= x);
    let lo = hi - 1;
    if x - grid[lo] < grid[hi] - x {
        (lo, false)
    } else {
        (hi, false)
    }
}

/// Per-row clamping bookkeeping for [`BuildWarning::GridTruncation`].
#[derive(Default)]
pub(crate) struct TruncationTally {
    pairs: usize,
    max_mass: f64,
}

impl TruncationTally {
    pub(crate) fn record(&mut self, mass: f64) {
        if mass > 0.0 {
            self.pairs += 1;
            self.max_mass = self.max_mass.max(mass.min(1.0));
        }
    }

    pub(crate) fn into_warnings(self) -> Vec<BuildWarning> {
        if self.pairs == 0 {
            Vec::new()
        } else {
            vec![BuildWarning::GridTruncation {
                pairs_affected: self.pairs,
                max_mass: self.max_mass,
            }]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crra_properties() {
        let u = CrraUtility::new(2.0).unwrap();
        assert_eq!(u.eval(1.0), ExtReal::Finite(0.0));
        assert_eq!(u.eval(2.0), ExtReal::Finite(0.5));
        assert_eq!(u.eval(0.0), ExtReal::NegInf);
        assert!(u.eval(1e6).to_f64() < u.upper_bound());
        assert!(CrraUtility::new(0.5).is_err());
        assert!(CrraUtility::new(1.0).is_err());
    }

    #[test]
    fn crra_increasing_and_concave() {
        let u = CrraUtility::new(3.5).unwrap();
        let xs: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| u.eval(x).to_f64()).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
        assert!(vals.windows(3).all(|w| w[2] - w[1] < w[1] - w[0]));
    }

    #[test]
    fn nearest_projection() {
        let grid = [0.0, 1.0, 2.0, 4.0];
        assert_eq!(project_nearest(&grid, 0.4), (0, false));
        assert_eq!(project_nearest(&grid, 0.5), (1, false));
        assert_eq!(project_nearest(&grid, 2.9), (2, false));
        assert_eq!(project_nearest(&grid, 3.1), (3, false));
        assert_eq!(project_nearest(&grid, 4.0), (3, false));
        assert_eq!(project_nearest(&grid, 9.0), (3, true));
        assert_eq!(project_nearest(&grid, -1.0), (0, false));
    }
}
