//! The transformed operator `S = W₀ M W₁`, the Bellman operator
//! `T = M W₁ W₀`, fixed-point iteration and greedy policies.
//!
//! * `W₀ v (x,a) = β E_{x,a} v(x′)`
//! * `W₁ g (x,a) = r(x,a) + g(x,a)`
//! * `M h (x) = max_{a ∈ Γ(x)} h(x,a)`
//!
//! `S` acts on [`GFunction`]s, which stay finite when rewards are unbounded
//! below; `T` acts on value functions, which may be `−∞`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use twofloat::TwoFloat;

use crate::ext_real::ExtReal;
use crate::program::{
    check_ell_bounded_below, ell, weighted_sup_norm_states, weighted_sup_norm_with, DynamicProgram,
    GFunction, WeightFunction,
};

/// Relative tolerance under which two action values count as tied in a
/// greedy argmax. Ties go to the smallest action index.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operator output is -inf at (state {state}, action {action})")]
    NonFiniteOutput { state: usize, action: usize },
    #[error("every feasible action at state {state} has value -inf")]
    DegenerateState { state: usize },
    #[error("no convergence after {} iterations (last residual {})", .0.iterations, .0.residuals.last().copied().unwrap_or(f64::NAN))]
    MaxIterExceeded(Box<SolveReport>),
    #[error("fixed-point hypotheses not established: {0}")]
    HypothesisNotVerified(String),
    #[error("function has {found} entries, expected {expected}")]
    Length { expected: usize, found: usize },
}

/// A value function on states; entries may be `−∞`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VFunction {
    values: Vec<ExtReal>,
}

impl VFunction {
    pub fn new(values: Vec<ExtReal>) -> Self {
        VFunction { values }
    }

    pub fn from_finite(values: &[f64]) -> Self {
        VFunction {
            values: values.iter().map(|&v| ExtReal::from(v)).collect(),
        }
    }

    pub fn zeros(dp: &DynamicProgram) -> Self {
        VFunction {
            values: vec![ExtReal::ZERO; dp.n_states()],
        }
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn get(&self, state: usize) -> ExtReal {
        self.values[state]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Finite entries, or `None` if any entry is `−∞`.
    pub fn to_finite(&self) -> Option<Vec<f64>> {
        self.values.iter().map(|v| v.finite()).collect()
    }
}

/// A stationary feasible policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Policy {
    action_index: Vec<usize>,
}

impl Policy {
    pub fn new(dp: &DynamicProgram, action_index: Vec<usize>) -> Option<Self> {
        let ok = action_index.len() == dp.n_states()
            && action_index
                .iter()
                .enumerate()
                .all(|(x, &a)| dp.feasibility().contains(x, a));
        ok.then_some(Policy { action_index })
    }

    pub fn action_index(&self) -> &[usize] {
        &self.action_index
    }

    pub fn action(&self, state: usize) -> usize {
        self.action_index[state]
    }

    /// Fraction of states where both policies pick the same action.
    pub fn agreement(&self, other: &Policy) -> f64 {
        assert_eq!(self.action_index.len(), other.action_index.len());
        let same = self
            .action_index
            .iter()
            .zip(&other.action_index)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.action_index.len() as f64
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), OperatorError> {
    if expected == found {
        Ok(())
    } else {
        Err(OperatorError::Length { expected, found })
    }
}

fn finite_or_error(dp: &DynamicProgram, h: Vec<ExtReal>) -> Result<GFunction, OperatorError> {
    let mut out = Vec::with_capacity(h.len());
    for (p, v) in h.into_iter().enumerate() {
        match v {
            ExtReal::Finite(x) => out.push(x),
            ExtReal::NegInf => {
                return Err(OperatorError::NonFiniteOutput {
                    state: dp.pair_state(p),
                    action: dp.pair_action(p),
                })
            }
        }
    }
    Ok(GFunction::from_vec_unchecked(out))
}

/// `W₀ v` with `−∞` propagation, on every feasible pair.
pub fn apply_w0_ext(v: &VFunction, dp: &DynamicProgram) -> Vec<ExtReal> {
    assert_eq!(v.len(), dp.n_states());
    let beta = dp.beta();
    (0..dp.n_pairs())
        .map(|p| dp.kernel().expect_ext(p, v.values()).scale(beta))
        .collect()
}

/// `W₀ v`; fails if some pair sees `−∞` with positive probability.
pub fn apply_w0(v: &VFunction, dp: &DynamicProgram) -> Result<GFunction, OperatorError> {
    check_len(dp.n_states(), v.len())?;
    finite_or_error(dp, apply_w0_ext(v, dp))
}

/// `W₁ g = r + g` on the feasible pairs.
pub fn apply_w1(g: &GFunction, dp: &DynamicProgram) -> Vec<ExtReal> {
    assert_eq!(g.len(), dp.n_pairs());
    dp.rewards()
        .values()
        .iter()
        .zip(g.values())
        .map(|(&r, &gv)| r + gv)
        .collect()
}

fn apply_w1_ext(g: &[ExtReal], dp: &DynamicProgram) -> Vec<ExtReal> {
    dp.rewards()
        .values()
        .iter()
        .zip(g)
        .map(|(&r, &gv)| r + gv)
        .collect()
}

/// `M h (x) = max_{a ∈ Γ(x)} h(x, a)`.
pub fn apply_m(h: &[ExtReal], dp: &DynamicProgram) -> VFunction {
    assert_eq!(h.len(), dp.n_pairs());
    VFunction {
        values: (0..dp.n_states())
            .map(|x| dp.pair_range(x).map(|p| h[p]).fold(ExtReal::NegInf, ExtReal::max))
            .collect(),
    }
}

/// `S g = W₀ M W₁ g`. Errors when the result is `−∞` somewhere, which
/// happens only if the boundedness hypotheses fail on this program.
pub fn apply_s(g: &GFunction, dp: &DynamicProgram) -> Result<GFunction, OperatorError> {
    check_len(dp.n_pairs(), g.len())?;
    let v = apply_m(&apply_w1(g, dp), dp);
    finite_or_error(dp, apply_w0_ext(&v, dp))
}

/// Bellman operator `T v = M W₁ W₀ v`.
pub fn apply_t(v: &VFunction, dp: &DynamicProgram) -> VFunction {
    apply_m(&apply_w1_ext(&apply_w0_ext(v, dp), dp), dp)
}

/// `v = M W₁ g`; at the fixed point this is the value function.
pub fn recover_value(g: &GFunction, dp: &DynamicProgram) -> VFunction {
    apply_m(&apply_w1(g, dp), dp)
}

/// Greedy argmax of per-pair values `h(x, a)`. Values within
/// `tie_tol · max(1, |max|)` of the maximum are ties, resolved to the
/// smallest action index.
pub fn greedy_from_values(h: &[ExtReal], dp: &DynamicProgram, tie_tol: f64) -> Result<Policy, OperatorError> {
    assert_eq!(h.len(), dp.n_pairs());
    let mut action_index = Vec::with_capacity(dp.n_states());
    for x in 0..dp.n_states() {
        let range = dp.pair_range(x);
        let best = range
            .clone()
            .map(|p| h[p])
            .fold(ExtReal::NegInf, ExtReal::max)
            .finite()
            .ok_or(OperatorError::DegenerateState { state: x })?;
        let cutoff = best - tie_tol * best.abs().max(1.0);
        let pick = range
            .clone()
            .find(|&p| matches!(h[p], ExtReal::Finite(v) if v >= cutoff))
            .expect("maximizer is in range");
        action_index.push(dp.pair_action(pick));
    }
    Ok(Policy { action_index })
}

/// A `g`-greedy policy: maximizes `r(x,a) + g(x,a)` at every state.
pub fn greedy_policy(g: &GFunction, dp: &DynamicProgram) -> Result<Policy, OperatorError> {
    check_len(dp.n_pairs(), g.len())?;
    greedy_from_values(&apply_w1(g, dp), dp, DEFAULT_TIE_TOL)
}

/// A `v`-greedy policy: maximizes `r(x,a) + β E_{x,a} v(x′)`.
pub fn greedy_policy_from_value(v: &VFunction, dp: &DynamicProgram) -> Result<Policy, OperatorError> {
    check_len(dp.n_states(), v.len())?;
    greedy_from_values(&apply_w1_ext(&apply_w0_ext(v, dp), dp), dp, DEFAULT_TIE_TOL)
}

/// Lower bound `β ℓ(x,a) + β² inf ℓ / (1 − β)` for the fixed point of `S`.
pub fn ell_lower_bound(dp: &DynamicProgram) -> Result<GFunction, OperatorError> {
    let check = check_ell_bounded_below(dp);
    let min = check.min_value.finite().ok_or(OperatorError::NonFiniteOutput {
        state: check.witness.0,
        action: check.witness.1,
    })?;
    let beta = dp.beta();
    let shift = beta * beta * min / (1.0 - beta);
    let values = ell(dp)
        .into_iter()
        .map(|l| beta * l.finite().expect("checked finite") + shift)
        .collect();
    Ok(GFunction::from_vec_unchecked(values))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Skip the Assumption / `ℓ` checks before iterating.
    pub waive_hypotheses: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            waive_hypotheses: false,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        SolverSettings {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub g_star: GFunction,
    pub v_star: VFunction,
    pub policy: Policy,
    /// `‖g_{k+1} − g_k‖_κ` per iteration.
    pub residuals: Vec<f64>,
    /// `residuals[k] / residuals[k − 1]` for `k ≥ 1`.
    pub modulus_estimates: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
}

/// Value iteration on `S` in double-double precision, so that successive
/// differences stay accurate down to the stopping tolerance.
struct PreciseIterate<'a> {
    dp: &'a DynamicProgram,
    kappa: &'a [f64],
    h: Vec<Option<TwoFloat>>,
}

impl<'a> PreciseIterate<'a> {
    fn new(dp: &'a DynamicProgram, kappa: &'a [f64]) -> Self {
        PreciseIterate {
            dp,
            kappa,
            h: vec![None; dp.n_states()],
        }
    }

    fn step(&mut self, g: &[TwoFloat], out: &mut [TwoFloat]) -> Result<(), OperatorError> {
        let dp = self.dp;
        for x in 0..dp.n_states() {
            let mut best: Option<TwoFloat> = None;
            for p in dp.pair_range(x) {
                if let ExtReal::Finite(r) = dp.reward(p) {
                    let v = g[p] + r;
                    best = Some(match best {
                        Some(b) if b >= v => b,
                        _ => v,
                    });
                }
            }
            self.h[x] = best;
        }
        let beta = dp.beta();
        for (p, slot) in out.iter_mut().enumerate() {
            let (targets, probs) = dp.kernel().row(p);
            let mut acc = TwoFloat::from(0.0);
            for (&j, &q) in targets.iter().zip(probs) {
                match self.h[j] {
                    Some(v) => acc += v * q,
                    None => {
                        return Err(OperatorError::NonFiniteOutput {
                            state: dp.pair_state(p),
                            action: dp.pair_action(p),
                        })
                    }
                }
            }
            *slot = acc * beta;
        }
        Ok(())
    }

    fn distance(&self, a: &[TwoFloat], b: &[TwoFloat]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(p, (x, y))| f64::from((*x - *y).abs()) / self.kappa[self.dp.pair_state(p)])
            .fold(0.0, f64::max)
    }
}

/// Iterates `g_{k+1} = S g_k` from `g0` until `‖g_{k+1} − g_k‖_κ ≤ tol`.
///
/// Unless waived, `w` must certify the Assumption constants for `dp` and `ℓ`
/// must be bounded below. The returned report carries `g*`, `v* = M W₁ g*`
/// and a `g*`-greedy policy.
pub fn solve_fixed_point(
    dp: &DynamicProgram,
    w: &WeightFunction,
    g0: &GFunction,
    settings: &SolverSettings,
) -> Result<SolveReport, OperatorError> {
    check_len(dp.n_pairs(), g0.len())?;
    check_len(dp.n_states(), w.kappa().len())?;
    if !settings.waive_hypotheses {
        if !w.certifies(dp) {
            return Err(OperatorError::HypothesisNotVerified(
                "weight function does not certify this program".into(),
            ));
        }
        let check = check_ell_bounded_below(dp);
        if !check.bounded_below {
            return Err(OperatorError::HypothesisNotVerified(format!(
                "ell is -inf at (state {}, action {})",
                check.witness.0, check.witness.1
            )));
        }
    }
    let mut it = PreciseIterate::new(dp, w.kappa());
    let mut current: Vec<TwoFloat> = g0.values().iter().map(|&v| TwoFloat::from(v)).collect();
    let mut next = current.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    while residuals.len() < settings.max_iter {
        it.step(&current, &mut next)?;
        let r = it.distance(&next, &current);
        residuals.push(r);
        std::mem::swap(&mut current, &mut next);
        if r <= settings.tol {
            converged = true;
            break;
        }
    }
    let g_star = GFunction::from_vec_unchecked(current.iter().map(|&v| f64::from(v)).collect());
    let modulus_estimates = residuals.windows(2).map(|w| w[1] / w[0]).collect();
    let report = SolveReport {
        v_star: recover_value(&g_star, dp),
        policy: greedy_policy(&g_star, dp)?,
        g_star,
        iterations: residuals.len(),
        residuals,
        modulus_estimates,
        converged,
        tol: settings.tol,
    };
    if converged {
        Ok(report)
    } else {
        Err(OperatorError::MaxIterExceeded(Box::new(report)))
    }
}

/// Result of classical value iteration on `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellmanSolve {
    pub v_star: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `v_{k+1} = T v_k` from `v0` until `‖v_{k+1} − v_k‖_κ ≤ tol`.
/// Only meaningful on programs whose rewards are bounded below, so every
/// iterate stays finite.
pub fn iterate_bellman(
    dp: &DynamicProgram,
    kappa: &[f64],
    v0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<BellmanSolve, OperatorError> {
    check_len(dp.n_states(), v0.len())?;
    let beta = dp.beta();
    let mut v: Vec<TwoFloat> = v0.iter().map(|&x| TwoFloat::from(x)).collect();
    let mut next = v.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        for (x, slot) in next.iter_mut().enumerate() {
            let mut best: Option<TwoFloat> = None;
            for p in dp.pair_range(x) {
                let r = match dp.reward(p) {
                    ExtReal::Finite(r) => r,
                    ExtReal::NegInf => continue,
                };
                let (targets, probs) = dp.kernel().row(p);
                let mut acc = TwoFloat::from(0.0);
                for (&j, &q) in targets.iter().zip(probs) {
                    acc += v[j] * q;
                }
                let val = acc * beta + r;
                best = Some(match best {
                    Some(b) if b >= val => b,
                    _ => val,
                });
            }
            *slot = best.ok_or(OperatorError::DegenerateState { state: x })?;
        }
        iterations += 1;
        let diff = next
            .iter()
            .zip(&v)
            .zip(kappa)
            .map(|((a, b), k)| f64::from((*a - *b).abs()) / k)
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if diff <= tol {
            converged = true;
            break;
        }
    }
    Ok(BellmanSolve {
        v_star: v.iter().map(|&x| f64::from(x)).collect(),
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModulusEstimate {
    /// Largest observed `‖Sg − Sh‖_κ / ‖g − h‖_κ`.
    pub max_ratio: f64,
    pub trials: usize,
    /// Trials dropped because `g = h`.
    pub skipped: usize,
    pub seed: u64,
}

/// Random draw of `g` uniform on `[−10, 10]` per pair.
pub fn random_g(dp: &DynamicProgram, rng: &mut impl Rng) -> GFunction {
    GFunction::from_vec_unchecked((0..dp.n_pairs()).map(|_| rng.random_range(-10.0..=10.0)).collect())
}

/// Samples `trials` pairs `(g, h)` and records the largest contraction ratio.
pub fn estimate_contraction_modulus(
    dp: &DynamicProgram,
    w: &WeightFunction,
    trials: usize,
    seed: u64,
) -> Result<ModulusEstimate, OperatorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..trials {
        let g = random_g(dp, &mut rng);
        let h = random_g(dp, &mut rng);
        match contraction_ratio(dp, w.kappa(), &g, &h)? {
            Some(r) => max_ratio = max_ratio.max(r),
            None => skipped += 1,
        }
    }
    Ok(ModulusEstimate {
        max_ratio,
        trials,
        skipped,
        seed,
    })
}

/// `‖Sg − Sh‖_κ / ‖g − h‖_κ`, or `None` when `g = h`.
pub fn contraction_ratio(
    dp: &DynamicProgram,
    kappa: &[f64],
    g: &GFunction,
    h: &GFunction,
) -> Result<Option<f64>, OperatorError> {
    let denom = weighted_sup_norm_with(g.sub(h).values(), kappa, dp);
    if denom == 0.0 {
        return Ok(None);
    }
    let num = weighted_sup_norm_with(apply_s(g, dp)?.sub(&apply_s(h, dp)?).values(), kappa, dp);
    Ok(Some(num / denom))
}

/// `‖v − u‖_κ` over states; `None` if either has `−∞` where the other does not.
pub fn value_distance(a: &VFunction, b: &VFunction, kappa: &[f64]) -> Option<f64> {
    let mut out: f64 = 0.0;
    for ((x, y), k) in a.values().iter().zip(b.values()).zip(kappa) {
        match (x, y) {
            (ExtReal::Finite(p), ExtReal::Finite(q)) => out = out.max((p - q).abs() / k),
            (ExtReal::NegInf, ExtReal::NegInf) => {}
            _ => return None,
        }
    }
    Some(out)
}

/// `‖v‖_κ` for a finite value function.
pub fn value_norm(v: &[f64], kappa: &[f64]) -> f64 {
    weighted_sup_norm_states(v, kappa)
}
