use crate::discretize::MarkovChain;
use crate::ext_real::ExtReal;
use crate::program::{ActionGrid, DynamicProgram, ProgramBuilder, StateGrid};

use super::{
    check_beta, check_grid, min_report, project_nearest, BuildError, BuildWarning, CrraUtility,
    LowerBoundReport, TruncationTally,
};

/// Income fluctuation problem: wealth `w`, Markov income `y`, savings `s ∈ [0, w]`,
/// `w′ = R s + y′`.
#[derive(Debug, Clone, PartialEq)]
pub struct SavingsSpec {
    pub beta: f64,
    /// Gross return on savings.
    pub gross_return: f64,
    pub utility: CrraUtility,
    pub income_chain: MarkovChain,
    /// Nonnegative, strictly increasing. Income levels are merged in by the builder.
    pub wealth_grid: Vec<f64>,
}

impl SavingsSpec {
    /// `ū = min_y Σ_{y′} P(y, y′) u(y′)`.
    pub fn lower_bound_condition(&self) -> LowerBoundReport {
        let chain = &self.income_chain;
        let per_state: Vec<ExtReal> = (0..chain.len())
            .map(|i| expected_utility(&self.utility, chain, i, |y| y))
            .collect();
        min_report("u_bar = min_y E_y u(y') > -inf", &per_state, chain.states())
    }
}

/// `E_i u(f(y′))` under the chain, skipping zero-probability successors.
pub(crate) fn expected_utility(
    u: &CrraUtility,
    chain: &MarkovChain,
    i: usize,
    f: impl Fn(f64) -> f64,
) -> ExtReal {
    let mut acc = ExtReal::ZERO;
    for (j, &y) in chain.states().iter().enumerate() {
        let p = chain.prob(i, j);
        if p > 0.0 {
            acc = acc + u.eval(f(y)).scale(p);
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct SavingsModel {
    dp: DynamicProgram,
    wealth_grid: Vec<f64>,
    exogenous: Vec<f64>,
    savings_levels: Vec<f64>,
    condition: LowerBoundReport,
    warnings: Vec<BuildWarning>,
}

impl SavingsModel {
    pub fn dp(&self) -> &DynamicProgram {
        &self.dp
    }

    pub fn into_dp(self) -> DynamicProgram {
        self.dp
    }

    /// Wealth axis actually used (the input grid merged with the income levels).
    pub fn wealth_grid(&self) -> &[f64] {
        &self.wealth_grid
    }

    /// Income levels (savings) or `z` levels (capital income risk).
    pub fn exogenous_levels(&self) -> &[f64] {
        &self.exogenous
    }

    /// Savings level of each action index.
    pub fn savings_levels(&self) -> &[f64] {
        &self.savings_levels
    }

    pub fn state_index(&self, wealth: usize, exogenous: usize) -> usize {
        wealth * self.exogenous.len() + exogenous
    }

    pub fn condition(&self) -> &LowerBoundReport {
        &self.condition
    }

    pub fn warnings(&self) -> &[BuildWarning] {
        &self.warnings
    }
}

/// Builds the savings problem. States are `(w, y)` with `y` varying fastest;
/// action `k` saves `savings_levels()[k]`. Income levels are added to the
/// wealth grid so that zero-saving successors land exactly on `y′`.
pub fn build_savings(spec: &SavingsSpec) -> Result<SavingsModel, BuildError> {
    check_beta(spec.beta)?;
    if !(spec.gross_return >= 0.0 && spec.gross_return.is_finite()) {
        return Err(BuildError::InvalidParameter(format!(
            "gross return R = {} must be a nonnegative real",
            spec.gross_return
        )));
    }
    let condition = spec.lower_bound_condition();
    if !condition.passed {
        return Err(BuildError::ConditionUBarViolated(condition));
    }
    let income = spec.income_chain.states();
    let mut grid = spec.wealth_grid.clone();
    grid.extend_from_slice(income);
    let grid = sorted_unique(grid);
    check_grid("wealth grid", &grid)?;
    if grid[0] < 0.0 {
        return Err(BuildError::InvalidParameter("wealth grid must be nonnegative".into()));
    }
    let chain = &spec.income_chain;
    let r = spec.gross_return;
    assemble_wealth_program(
        spec.beta,
        &spec.utility,
        grid,
        income.to_vec(),
        "y",
        condition,
        |j, s, out| {
            for (jn, &y) in income.iter().enumerate() {
                let p = chain.prob(j, jn);
                if p > 0.0 {
                    out.push((r * s + y, jn, p));
                }
            }
        },
    )
}

pub(crate) fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

/// Shared assembly for wealth-by-exogenous-state problems with savings
/// actions. `successors(j, s, out)` appends `(next wealth, next exogenous
/// index, probability)` for exogenous index `j` and savings `s`.
pub(crate) fn assemble_wealth_program(
    beta: f64,
    utility: &CrraUtility,
    grid: Vec<f64>,
    exogenous: Vec<f64>,
    exo_label: &str,
    condition: LowerBoundReport,
    successors: impl Fn(usize, f64, &mut Vec<(f64, usize, f64)>),
) -> Result<SavingsModel, BuildError> {
    let mut savings_levels = vec![0.0];
    savings_levels.extend_from_slice(&grid);
    let savings_levels = sorted_unique(savings_levels);
    let states = StateGrid::product(&[("w", &grid), (exo_label, &exogenous)])?;
    let actions = ActionGrid::scalar("s", &savings_levels)?;
    let ne = exogenous.len();
    let mut builder = ProgramBuilder::new(states, actions, beta);
    let mut tally = TruncationTally::default();
    let mut draws = Vec::new();
    for (iw, &w) in grid.iter().enumerate() {
        for j in 0..ne {
            let state = iw * ne + j;
            for (k, &s) in savings_levels.iter().enumerate() {
                if s > w {
                    break;
                }
                draws.clear();
                successors(j, s, &mut draws);
                let mut clamped = 0.0;
                let row = draws
                    .iter()
                    .map(|&(wn, jn, p)| {
                        let (i, above) = project_nearest(&grid, wn);
                        if above {
                            clamped += p;
                        }
                        (i * ne + jn, p)
                    })
                    .collect();
                tally.record(clamped);
                builder.push(state, k, utility.eval(w - s), row)?;
            }
        }
    }
    Ok(SavingsModel {
        dp: builder.build()?,
        wealth_grid: grid,
        exogenous,
        savings_levels,
        condition,
        warnings: tally.into_warnings(),
    })
}
