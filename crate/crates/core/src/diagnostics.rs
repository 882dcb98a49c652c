//! Verification harness: residuals, contraction-rate audits, the
//! bounded-truncation oracle and restart agreement.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::models::SavingsModel;
use crate::operator::{
    apply_s, apply_w0, estimate_contraction_modulus, greedy_policy, greedy_policy_from_value, iterate_bellman,
    recover_value, solve_fixed_point, ModulusEstimate, OperatorError, Policy, SolveReport, SolverSettings,
    VFunction,
};
use crate::program::{
    check_assumption_ws, weighted_sup_norm, weighted_sup_norm_with, AssumptionError, DynamicProgram, GFunction,
    WeightFunction,
};

/// Slack allowed above `αβ` for observed residual ratios.
pub const RATE_SLACK: f64 = 1e-8;

/// Audits start after this many iterations.
pub const RATE_BURN_IN: usize = 3;

/// Minimum iterations before the rate audit applies.
pub const RATE_MIN_ITERATIONS: usize = 5;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("truncated oracle disagrees at state {worst_state} (floor {}): value gap {}, g gap {}, policy agreement {}",
        .report.floor, .report.value_deviation, .report.g_deviation, .report.policy_agreement)]
    OracleDisagreement { worst_state: usize, report: Box<OracleReport> },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Assumption(#[from] AssumptionError),
}

/// `‖Sg − g‖_κ`.
pub fn bellman_residual_g(g: &GFunction, dp: &DynamicProgram, w: &WeightFunction) -> Result<f64, OperatorError> {
    Ok(weighted_sup_norm(&apply_s(g, dp)?.sub(g), w, dp))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RateAudit {
    pub passed: bool,
    /// Fewer than five iterations: nothing to audit.
    pub skipped: bool,
    pub bound: f64,
    /// Largest audited ratio and the (1-based) iteration it was observed at.
    pub worst: Option<(usize, f64)>,
    /// Ratios after the burn-in.
    pub audited: Vec<f64>,
}

/// Passes iff every residual ratio after the third iteration is at most `αβ + 1e-8`.
pub fn rate_audit(report: &SolveReport, w: &WeightFunction) -> RateAudit {
    let bound = w.modulus_bound() + RATE_SLACK;
    if report.residuals.len() < RATE_MIN_ITERATIONS {
        return RateAudit {
            passed: true,
            skipped: true,
            bound,
            worst: None,
            audited: Vec::new(),
        };
    }
    // residuals[k] is iteration k + 1; the ratio at iteration k + 1 compares it with iteration k
    let mut audited = Vec::new();
    let mut worst: Option<(usize, f64)> = None;
    for k in RATE_BURN_IN..report.residuals.len() {
        let prev = report.residuals[k - 1];
        if prev == 0.0 {
            continue;
        }
        let ratio = report.residuals[k] / prev;
        audited.push(ratio);
        if worst.is_none_or(|(_, r)| ratio > r) {
            worst = Some((k + 1, ratio));
        }
    }
    RateAudit {
        passed: worst.is_none_or(|(_, r)| r <= bound),
        skipped: false,
        bound,
        worst,
        audited,
    }
}

/// The last `k` residual ratios of a solve.
pub fn rate_tail(report: &SolveReport, k: usize) -> Vec<f64> {
    let m = &report.modulus_estimates;
    m[m.len().saturating_sub(k)..].to_vec()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OracleReport {
    pub floor: f64,
    /// Tolerance the three checks are held to.
    pub tol: f64,
    /// `‖v*_T − M W₁ g*_S‖_κ`.
    pub value_deviation: f64,
    /// `‖g*_S − W₀ v*_T‖_κ`.
    pub g_deviation: f64,
    pub policy_agreement: f64,
    /// State with the largest value gap, or the first policy disagreement.
    pub worst_state: usize,
    pub iterations_bellman: usize,
    pub iterations_transformed: usize,
    pub passed: bool,
}

/// Solves `dp` with rewards floored at `floor` both by classical value
/// iteration on `T` and by iterating `S`, then compares values, `g` and
/// greedy policies.
pub fn truncated_oracle_check(
    dp: &DynamicProgram,
    floor: f64,
    w: &WeightFunction,
    tol: f64,
) -> Result<OracleReport, DiagnosticsError> {
    assert!(floor.is_finite(), "truncation floor must be finite");
    let truncated = dp.truncated_below(floor);
    let wt = check_assumption_ws(&truncated, w.kappa())?;
    let kappa = wt.kappa();
    // Both iterates must sit well inside `tol` of their fixed points.
    let inner = tol.min(1e-10) * (1.0 - wt.modulus_bound()) / 10.0;
    let max_iter = 10_000_000;
    let bellman = iterate_bellman(&truncated, kappa, &vec![0.0; truncated.n_states()], inner, max_iter)?;
    let settings = SolverSettings {
        tol: inner,
        max_iter,
        waive_hypotheses: false,
    };
    let solve = solve_fixed_point(&truncated, &wt, &GFunction::zeros(&truncated), &settings)?;

    let v_t = VFunction::from_finite(&bellman.v_star);
    let v_s = recover_value(&solve.g_star, &truncated);
    let mut worst_state = 0;
    let mut value_deviation: f64 = 0.0;
    for x in 0..truncated.n_states() {
        let gap = (v_t.get(x).to_f64() - v_s.get(x).to_f64()).abs() / kappa[x];
        if gap > value_deviation {
            value_deviation = gap;
            worst_state = x;
        }
    }
    let g_t = apply_w0(&v_t, &truncated)?;
    let g_deviation = weighted_sup_norm_with(solve.g_star.sub(&g_t).values(), kappa, &truncated);
    let p_t = greedy_policy_from_value(&v_t, &truncated)?;
    let p_s = greedy_policy(&solve.g_star, &truncated)?;
    let policy_agreement = p_s.agreement(&p_t);
    if policy_agreement < 1.0 {
        worst_state = first_disagreement(&p_s, &p_t).unwrap_or(worst_state);
    }
    let passed = value_deviation <= tol && g_deviation <= tol && policy_agreement == 1.0;
    let report = OracleReport {
        floor,
        tol,
        value_deviation,
        g_deviation,
        policy_agreement,
        worst_state,
        iterations_bellman: bellman.iterations,
        iterations_transformed: solve.iterations,
        passed,
    };
    if passed {
        Ok(report)
    } else {
        Err(DiagnosticsError::OracleDisagreement {
            worst_state,
            report: Box::new(report),
        })
    }
}

fn first_disagreement(a: &Policy, b: &Policy) -> Option<usize> {
    a.action_index().iter().zip(b.action_index()).position(|(x, y)| x != y)
}

/// Solves from several starting points and reports the largest pairwise
/// κ-distance between the fixed points found.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RestartAgreement {
    pub starts: usize,
    pub max_spread: f64,
    /// `2 tol / (1 − αβ)`.
    pub bound: f64,
    pub passed: bool,
}

pub fn restart_agreement(
    dp: &DynamicProgram,
    w: &WeightFunction,
    starts: &[GFunction],
    settings: &SolverSettings,
) -> Result<RestartAgreement, OperatorError> {
    let solutions = starts
        .iter()
        .map(|g0| solve_fixed_point(dp, w, g0, settings).map(|r| r.g_star))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_spread: f64 = 0.0;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            max_spread = max_spread.max(weighted_sup_norm(&a.sub(b), w, dp));
        }
    }
    let bound = 2.0 * settings.tol / (1.0 - w.modulus_bound());
    Ok(RestartAgreement {
        starts: starts.len(),
        max_spread,
        bound,
        passed: max_spread <= bound,
    })
}

/// Knobs for [`run_diagnostics`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsOptions {
    /// Random `(g, h)` pairs for the contraction-modulus estimate.
    pub modulus_trials: usize,
    /// Truncation floors for the oracle check; empty disables it.
    pub oracle_floors: Vec<f64>,
    pub oracle_tol: f64,
    /// Number of trailing residual ratios to report.
    pub rate_tail: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            modulus_trials: 200,
            oracle_floors: vec![-10.0, -50.0, -200.0],
            oracle_tol: 1e-8,
            rate_tail: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DiagnosticsReport {
    /// `‖Sg* − g*‖_κ`.
    pub bellman_residual: f64,
    pub modulus_observed: f64,
    /// `αβ`.
    pub modulus_bound: f64,
    pub modulus: ModulusEstimate,
    /// Smallest greedy-policy agreement over the oracle floors (1 if none ran).
    pub oracle_policy_agreement: f64,
    pub oracle: Vec<OracleReport>,
    pub rate_tail: Vec<f64>,
    pub rate_audit: RateAudit,
    pub passed: bool,
}

/// Runs every check on a finished solve. Oracle disagreements are recorded
/// in the report rather than returned as errors.
pub fn run_diagnostics(
    dp: &DynamicProgram,
    w: &WeightFunction,
    report: &SolveReport,
    seed: u64,
    options: &DiagnosticsOptions,
) -> Result<DiagnosticsReport, DiagnosticsError> {
    let bellman_residual = bellman_residual_g(&report.g_star, dp, w)?;
    let modulus = estimate_contraction_modulus(dp, w, options.modulus_trials, seed)?;
    let mut oracle = Vec::new();
    for &floor in &options.oracle_floors {
        match truncated_oracle_check(dp, floor, w, options.oracle_tol) {
            Ok(r) => oracle.push(r),
            Err(DiagnosticsError::OracleDisagreement { report, .. }) => oracle.push(*report),
            Err(e) => return Err(e),
        }
    }
    let oracle_policy_agreement = oracle.iter().map(|r| r.policy_agreement).fold(1.0, f64::min);
    let audit = rate_audit(report, w);
    let modulus_bound = w.modulus_bound();
    let passed = modulus.max_ratio <= modulus_bound + 1e-10 && oracle.iter().all(|r| r.passed) && audit.passed;
    Ok(DiagnosticsReport {
        bellman_residual,
        modulus_observed: modulus.max_ratio,
        modulus_bound,
        modulus,
        oracle_policy_agreement,
        oracle,
        rate_tail: rate_tail(report, options.rate_tail),
        rate_audit: audit,
        passed,
    })
}

/// First `(state, pair)` at which `g` decreases in the savings level by
/// more than `tol · max(1, |g|)`.
pub fn first_savings_decrease(dp: &DynamicProgram, g: &GFunction, tol: f64) -> Option<(usize, usize)> {
    for x in 0..dp.n_states() {
        let range = dp.pair_range(x);
        for p in range.start + 1..range.end {
            let (a, b) = (g.get(p - 1), g.get(p));
            if b < a - tol * a.abs().max(1.0) {
                return Some((x, p));
            }
        }
    }
    None
}

/// Random `g(x, s) = φ(exogenous(x), s)` with `φ` nondecreasing in `s`,
/// the class the savings operators preserve.
pub fn random_monotone_g(model: &SavingsModel, rng: &mut impl Rng) -> GFunction {
    let dp = model.dp();
    let ne = model.exogenous_levels().len();
    let na = model.savings_levels().len();
    let phi: Vec<Vec<f64>> = (0..ne)
        .map(|_| {
            let mut level = rng.random_range(-10.0..=10.0);
            (0..na)
                .map(|_| {
                    level += rng.random_range(0.0..=1.0);
                    level
                })
                .collect()
        })
        .collect();
    GFunction::from_fn(dp, |_, x, a| phi[x % ne][a])
}

/// Seeded wrapper around [`random_monotone_g`].
pub fn seeded_monotone_draws(model: &SavingsModel, count: usize, seed: u64) -> Vec<GFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_monotone_g(model, &mut rng)).collect()
}

/// States `(w index, exogenous index)` where the optimal savings level falls
/// as wealth rises. Reported as warnings only.
pub fn savings_policy_monotonicity(model: &SavingsModel, policy: &Policy) -> Vec<(usize, usize)> {
    let ne = model.exogenous_levels().len();
    let levels = model.savings_levels();
    let mut out = Vec::new();
    for j in 0..ne {
        for iw in 1..model.wealth_grid().len() {
            let lo = levels[policy.action(model.state_index(iw - 1, j))];
            let hi = levels[policy.action(model.state_index(iw, j))];
            if hi < lo {
                out.push((iw, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_real::ExtReal;
    use crate::program::{unit_kappa, ActionGrid, GridPoint, ProgramBuilder, StateGrid};

    fn single(reward: f64) -> DynamicProgram {
        let states = StateGrid::new(vec![GridPoint::new(vec![0.0])], vec![]).unwrap();
        let mut b = ProgramBuilder::new(states, ActionGrid::discrete(&["stay"]).unwrap(), 0.9);
        b.push(0, 0, ExtReal::Finite(reward), vec![(0, 1.0)]).unwrap();
        b.build().unwrap()
    }

    fn fake_report(residuals: Vec<f64>) -> SolveReport {
        let dp = single(1.0);
        let g = GFunction::zeros(&dp);
        SolveReport {
            v_star: recover_value(&g, &dp),
            policy: greedy_policy(&g, &dp).unwrap(),
            g_star: g,
            iterations: residuals.len(),
            modulus_estimates: residuals.windows(2).map(|w| w[1] / w[0]).collect(),
            residuals,
            converged: true,
            tol: 1e-10,
        }
    }

    #[test]
    fn residual_of_zero_on_single_state() {
        let dp = single(1.0);
        let w = check_assumption_ws(&dp, &unit_kappa(&dp)).unwrap();
        let r = bellman_residual_g(&GFunction::zeros(&dp), &dp, &w).unwrap();
        assert!((r - 0.9).abs() < 1e-15);
    }

    #[test]
    fn oracle_single_state() {
        let dp = single(1.0);
        let w = check_assumption_ws(&dp, &unit_kappa(&dp)).unwrap();
        let rep = truncated_oracle_check(&dp, -10.0, &w, 1e-8).unwrap();
        assert!(rep.passed);
        assert!(rep.value_deviation <= 1e-8);
    }

    #[test]
    fn rate_audit_cases() {
        let dp = single(1.0);
        let w = check_assumption_ws(&dp, &unit_kappa(&dp)).unwrap();
        let short = rate_audit(&fake_report(vec![1e-11]), &w);
        assert!(short.passed && short.skipped);
        let good: Vec<f64> = (0..8).map(|k| 0.9f64.powi(k)).collect();
        assert!(rate_audit(&fake_report(good.clone()), &w).passed);
        let mut bad = good;
        bad[6] = bad[5] * 1.05;
        let audit = rate_audit(&fake_report(bad), &w);
        assert!(!audit.passed);
        assert_eq!(audit.worst.unwrap().0, 7);
    }

    #[test]
    fn burn_in_ratios_are_not_audited() {
        let dp = single(1.0);
        let w = check_assumption_ws(&dp, &unit_kappa(&dp)).unwrap();
        let mut r: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
        r[1] = 2.0; // ratio at iteration 2 exceeds the bound
        r[2] = 1.0;
        r[3] = 0.5;
        assert!(rate_audit(&fake_report(r), &w).passed);
    }
}
