use crate::discretize::{MarkovChain, QuadratureRule};
use crate::ext_real::ExtReal;
use crate::program::{ActionGrid, DynamicProgram, GridPoint, ProgramBuilder, StateGrid};

use super::{check_beta, check_grid, min_report, BuildError, CrraUtility, LowerBoundReport};

/// How output combines the persistent state with the transitory shock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputMap {
    /// `y = z + ξ`
    #[default]
    Additive,
    /// `y = z ξ`
    Multiplicative,
}

impl OutputMap {
    pub fn apply(self, z: f64, xi: f64) -> f64 {
        match self {
            OutputMap::Additive => z + xi,
            OutputMap::Multiplicative => z * xi,
        }
    }
}

/// Sovereign default with permanent exclusion: assets `w ≥ −b` at gross
/// return `R`, output `y = y(z, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultSpec {
    pub beta: f64,
    pub utility: CrraUtility,
    pub gross_return: f64,
    pub borrowing_limit: f64,
    pub z_chain: MarkovChain,
    pub output_map: OutputMap,
    pub xi: QuadratureRule,
    /// Strictly increasing, starting at `−b`.
    pub asset_grid: Vec<f64>,
}

impl DefaultSpec {
    fn output(&self, j: usize, k: usize) -> f64 {
        self.output_map.apply(self.z_chain.states()[j], self.xi.nodes()[k])
    }

    /// `min_z E_z u(y′)`.
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
                    for (k, &q) in self.xi.weights().iter().enumerate() {
                        if q > 0.0 {
                            acc = acc + self.utility.eval(self.output(jn, k)).scale(p * q);
                        }
                    }
                }
                acc
            })
            .collect();
        min_report("min_z E_z u(y') > -inf", &per_state, chain.states())
    }
}

#[derive(Debug, Clone)]
pub struct DefaultModel {
    dp: DynamicProgram,
    n_assets: usize,
    n_z: usize,
    n_xi: usize,
    condition: LowerBoundReport,
}

impl DefaultModel {
    pub fn dp(&self) -> &DynamicProgram {
        &self.dp
    }

    pub fn into_dp(self) -> DynamicProgram {
        self.dp
    }

    /// Index of the default action; continue actions `0..n_assets` choose the
    /// matching asset-grid point.
    pub fn default_action(&self) -> usize {
        self.n_assets
    }

    /// Market-access state with asset index `i`, `z` index `j`, shock node `k`.
    pub fn state_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_z + j) * self.n_xi + k
    }

    /// Autarky state for `z` index `j` and shock node `k`.
    pub fn autarky_index(&self, j: usize, k: usize) -> usize {
        self.n_assets * self.n_z * self.n_xi + j * self.n_xi + k
    }

    pub fn n_market_states(&self) -> usize {
        self.n_assets * self.n_z * self.n_xi
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_assets, self.n_z, self.n_xi)
    }

    pub fn condition(&self) -> &LowerBoundReport {
        &self.condition
    }
}

/// Builds the default problem. Market-access states `(w, y, z)` come first,
/// then the autarky states `(NaN, y, z)` tagged `"autarky"`. Defaulting earns
/// `u(y)` and moves to autarky; in autarky the default action is the only
/// one, so `z` keeps evolving and output is consumed forever.
pub fn build_default(spec: &DefaultSpec) -> Result<DefaultModel, BuildError> {
    check_beta(spec.beta)?;
    let b = spec.borrowing_limit;
    if !(b > 0.0 && b.is_finite()) {
        return Err(BuildError::InvalidParameter(format!("borrowing limit b = {b} must be positive")));
    }
    let r = spec.gross_return;
    if !(r > 0.0 && r.is_finite()) {
        return Err(BuildError::InvalidParameter(format!("gross return R = {r} must be positive")));
    }
    check_grid("asset grid", &spec.asset_grid)?;
    if spec.asset_grid[0] != -b {
        return Err(BuildError::InvalidParameter(format!(
            "asset grid must start at -b = {}, found {}",
            -b, spec.asset_grid[0]
        )));
    }
    let condition = spec.lower_bound_condition();
    if !condition.passed {
        return Err(BuildError::ConditionOdbbViolated(condition));
    }

    let (na, nz, nx) = (spec.asset_grid.len(), spec.z_chain.len(), spec.xi.len());
    let zs = spec.z_chain.states();
    let mut points = Vec::with_capacity((na + 1) * nz * nx);
    for &w in &spec.asset_grid {
        for j in 0..nz {
            for k in 0..nx {
                points.push(GridPoint::new(vec![w, spec.output(j, k), zs[j]]));
            }
        }
    }
    let n_market = points.len();
    for j in 0..nz {
        for k in 0..nx {
            points.push(GridPoint::tagged(vec![f64::NAN, spec.output(j, k), zs[j]], "autarky"));
        }
    }
    let states = StateGrid::new(points, vec!["w".into(), "y".into(), "z".into()])?;
    let mut action_points: Vec<GridPoint> = spec.asset_grid.iter().map(|&a| GridPoint::new(vec![a])).collect();
    action_points.push(GridPoint::tagged(vec![f64::NAN], "default"));
    let actions = ActionGrid::new(action_points, vec!["w_next".into()])?;
    let default_action = na;
    let mut builder = ProgramBuilder::new(states, actions, spec.beta);

    // successor (z index, shock node) mass from each z index
    let next: Vec<Vec<(usize, usize, f64)>> = (0..nz)
        .map(|j| {
            let mut out = Vec::new();
            for jn in 0..nz {
                let p = spec.z_chain.prob(j, jn);
                for (k, &q) in spec.xi.weights().iter().enumerate() {
                    if p * q > 0.0 {
                        out.push((jn, k, p * q));
                    }
                }
            }
            out
        })
        .collect();
    let autarky_row = |j: usize| -> Vec<(usize, f64)> {
        next[j].iter().map(|&(jn, k, p)| (n_market + jn * nx + k, p)).collect()
    };

    for (i, &w) in spec.asset_grid.iter().enumerate() {
        for j in 0..nz {
            for k in 0..nx {
                let x = (i * nz + j) * nx + k;
                let y = spec.output(j, k);
                let cap = r * (w + y);
                if cap < -b {
                    return Err(BuildError::EmptyFeasibleSet { state: x });
                }
                for (ia, &wn) in spec.asset_grid.iter().enumerate() {
                    if wn > cap {
                        break;
                    }
                    let row = next[j].iter().map(|&(jn, kn, p)| ((ia * nz + jn) * nx + kn, p)).collect();
                    builder.push(x, ia, spec.utility.eval(w + y - wn / r), row)?;
                }
                builder.push(x, default_action, spec.utility.eval(y), autarky_row(j))?;
            }
        }
    }
    for j in 0..nz {
        for k in 0..nx {
            let x = n_market + j * nx + k;
            builder.push(x, default_action, spec.utility.eval(spec.output(j, k)), autarky_row(j))?;
        }
    }
    Ok(DefaultModel {
        dp: builder.build()?,
        n_assets: na,
        n_z: nz,
        n_xi: nx,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DefaultSpec {
        DefaultSpec {
            beta: 0.9,
            utility: CrraUtility::new(2.0).unwrap(),
            gross_return: 1.05,
            borrowing_limit: 0.5,
            z_chain: MarkovChain::new(vec![0.8, 1.2], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap(),
            output_map: OutputMap::Additive,
            xi: QuadratureRule::new(vec![0.1, 0.3], vec![0.5, 0.5]).unwrap(),
            asset_grid: vec![-0.5, 0.0, 0.5, 1.0],
        }
    }

    #[test]
    fn layout_and_rewards() {
        let s = spec();
        let m = build_default(&s).unwrap();
        let dp = m.dp();
        assert_eq!(dp.n_states(), 4 * 2 * 2 + 2 * 2);
        let x = m.state_index(1, 0, 0); // w = 0, y = 0.9
        let pairs = dp.pair_range(x);
        let last = pairs.end - 1;
        assert_eq!(dp.pair_action(last), m.default_action());
        assert_eq!(dp.reward(last), s.utility.eval(0.9));
        let first = pairs.start;
        assert_eq!(dp.pair_action(first), 0);
        assert_eq!(dp.reward(first), s.utility.eval(0.9 + 0.5 / 1.05));
        let a = m.autarky_index(1, 1);
        assert_eq!(dp.feasibility().actions(a), &[m.default_action()]);
        let (targets, _) = dp.kernel().row(dp.pair_range(a).start);
        assert!(targets.iter().all(|&t| t >= m.n_market_states()));
    }

    #[test]
    fn grid_must_start_at_minus_b() {
        let mut s = spec();
        s.asset_grid = vec![-0.4, 0.0, 1.0];
        assert!(matches!(build_default(&s), Err(BuildError::InvalidParameter(_))));
    }

    #[test]
    fn empty_continuation_set_detected() {
        let mut s = spec();
        // R(y - b) < -b needs b > R y / (R - 1) = 18.9 at the lowest output
        s.borrowing_limit = 30.0;
        s.asset_grid = vec![-30.0, 0.0, 1.0];
        assert!(matches!(build_default(&s), Err(BuildError::EmptyFeasibleSet { state: 0 })));
    }

    #[test]
    fn zero_output_fails_condition() {
        let mut s = spec();
        s.output_map = OutputMap::Multiplicative;
        s.xi = QuadratureRule::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(build_default(&s), Err(BuildError::ConditionOdbbViolated(_))));
    }
}
