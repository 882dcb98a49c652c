use crate::discretize::{MarkovChain, QuadratureRule};
use crate::ext_real::ExtReal;
use crate::program::{ActionGrid, DynamicProgram, GridPoint, ProgramBuilder, StateGrid};

use super::{check_beta, min_report, BuildError, CrraUtility, LowerBoundReport};

pub const ACCEPT: usize = 0;
pub const CONTINUE: usize = 1;
/// The only action at the absorbing employed state.
pub const EMPLOYED: usize = 2;

/// Job search with persistent and transitory components: wage offer
/// `w = z + ξ`, unemployment compensation `c = z + ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSearchSpec {
    pub beta: f64,
    pub utility: CrraUtility,
    pub z_chain: MarkovChain,
    pub xi: QuadratureRule,
    pub zeta: QuadratureRule,
}

impl JobSearchSpec {
    fn expected_transient_utility(&self, i: usize, rule: &QuadratureRule) -> ExtReal {
        let chain = &self.z_chain;
        let mut acc = ExtReal::ZERO;
        for (jn, &z) in chain.states().iter().enumerate() {
            let p = chain.prob(i, jn);
            if p == 0.0 {
                continue;
            }
            for (e, q) in rule.iter() {
                if q > 0.0 {
                    acc = acc + self.utility.eval(z + e).scale(p * q);
                }
            }
        }
        acc
    }

    /// Either `min_z E_z u(w′) > −∞` or `min_z E_z u(c′) > −∞`. Reports the
    /// first alternative that holds, or the wage alternative if neither does.
    pub fn lower_bound_condition(&self) -> LowerBoundReport {
        let n = self.z_chain.len();
        let wages: Vec<ExtReal> = (0..n).map(|i| self.expected_transient_utility(i, &self.xi)).collect();
        let comp: Vec<ExtReal> = (0..n).map(|i| self.expected_transient_utility(i, &self.zeta)).collect();
        let levels = self.z_chain.states();
        let w = min_report("min_z E_z u(w') > -inf", &wages, levels);
        if w.passed {
            return w;
        }
        let c = min_report("min_z E_z u(c') > -inf", &comp, levels);
        if c.passed {
            return c;
        }
        LowerBoundReport {
            condition: "min_z E_z u(w') > -inf or min_z E_z u(c') > -inf".into(),
            ..w
        }
    }
}

#[derive(Debug, Clone)]
pub struct JobSearchModel {
    dp: DynamicProgram,
    n_z: usize,
    n_xi: usize,
    n_zeta: usize,
    condition: LowerBoundReport,
}

impl JobSearchModel {
    pub fn dp(&self) -> &DynamicProgram {
        &self.dp
    }

    pub fn into_dp(self) -> DynamicProgram {
        self.dp
    }

    /// State for `z` index `j`, wage node `k` and compensation node `m`.
    pub fn state_index(&self, j: usize, k: usize, m: usize) -> usize {
        (j * self.n_xi + k) * self.n_zeta + m
    }

    /// The absorbing state entered on acceptance.
    pub fn employed_state(&self) -> usize {
        self.n_z * self.n_xi * self.n_zeta
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_z, self.n_xi, self.n_zeta)
    }

    pub fn condition(&self) -> &LowerBoundReport {
        &self.condition
    }
}

/// Builds the job-search problem. Searching states `(w, c, z)` come first;
/// the last state is the absorbing employed state (coordinates NaN, tag
/// `"employed"`), entered on acceptance with the one-shot reward
/// `u(w)/(1 − β)` and yielding zero thereafter.
pub fn build_job_search(spec: &JobSearchSpec) -> Result<JobSearchModel, BuildError> {
    check_beta(spec.beta)?;
    let condition = spec.lower_bound_condition();
    if !condition.passed {
        return Err(BuildError::ConditionUp2Violated(condition));
    }
    let (nz, nx, nc) = (spec.z_chain.len(), spec.xi.len(), spec.zeta.len());
    let zs = spec.z_chain.states();
    let mut points = Vec::with_capacity(nz * nx * nc + 1);
    for &z in zs {
        for &xi in spec.xi.nodes() {
            for &zeta in spec.zeta.nodes() {
                points.push(GridPoint::new(vec![z + xi, z + zeta, z]));
            }
        }
    }
    let employed = points.len();
    points.push(GridPoint::tagged(vec![f64::NAN; 3], "employed"));
    let states = StateGrid::new(points, vec!["w".into(), "c".into(), "z".into()])?;
    let actions = ActionGrid::discrete(&["accept", "continue", "employed"])?;
    let mut builder = ProgramBuilder::new(states, actions, spec.beta);
    let scale = 1.0 / (1.0 - spec.beta);

    for (j, &z) in zs.iter().enumerate() {
        let mut continuation = Vec::new();
        for jn in 0..nz {
            let p = spec.z_chain.prob(j, jn);
            if p == 0.0 {
                continue;
            }
            for (k, qx) in spec.xi.weights().iter().enumerate() {
                for (m, qc) in spec.zeta.weights().iter().enumerate() {
                    let mass = p * qx * qc;
                    if mass > 0.0 {
                        continuation.push(((jn * nx + k) * nc + m, mass));
                    }
                }
            }
        }
        for (k, &xi) in spec.xi.nodes().iter().enumerate() {
            for (m, &zeta) in spec.zeta.nodes().iter().enumerate() {
                let x = (j * nx + k) * nc + m;
                builder.push(x, ACCEPT, spec.utility.eval(z + xi).scale(scale), vec![(employed, 1.0)])?;
                builder.push(x, CONTINUE, spec.utility.eval(z + zeta), continuation.clone())?;
            }
        }
    }
    builder.push(employed, EMPLOYED, ExtReal::ZERO, vec![(employed, 1.0)])?;
    Ok(JobSearchModel {
        dp: builder.build()?,
        n_z: nz,
        n_xi: nx,
        n_zeta: nc,
        condition,
    })
}
