//! Finite dynamic programs: state and action grids, the feasible
//! correspondence, rewards, the stochastic kernel, and the weighted-norm
//! machinery used to certify boundedness and contraction.
//!
//! Feasible state-action pairs are stored in state-major order, and within a
//! state in increasing action index. A *pair index* `p` addresses that flat
//! layout; [`GFunction`] values and reward entries live on it.

use std::ops::Range;

use thiserror::Error;

use crate::ext_real::ExtReal;

/// Tolerance on kernel row sums and quadrature weight sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("state grid is empty")]
    EmptyStateGrid,
    #[error("action grid is empty")]
    EmptyActionGrid,
    #[error("states {0} and {1} coincide")]
    DuplicateState(usize, usize),
    #[error("actions {0} and {1} coincide")]
    DuplicateAction(usize, usize),
    #[error("axis `{0}` is not strictly increasing")]
    AxisNotIncreasing(String),
    #[error("point {index} has {found} coordinates, expected {expected}")]
    CoordinateArity { index: usize, expected: usize, found: usize },
    #[error("coordinate {value} of point {index} is not finite")]
    NonFiniteCoordinate { index: usize, value: f64 },
    #[error("state {0} has no feasible action")]
    NoFeasibleAction(usize),
    #[error("state {state}: action {action} listed twice")]
    DuplicateFeasibleAction { state: usize, action: usize },
    #[error("state {state}: action index {action} out of range")]
    ActionOutOfRange { state: usize, action: usize },
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("discount factor {0} not in (0, 1)")]
    InvalidDiscount(f64),
    #[error("reward at (state {state}, action {action}) is {value}; only reals and -inf are allowed")]
    InvalidReward { state: usize, action: usize, value: f64 },
    #[error("kernel row at (state {state}, action {action}): {reason}")]
    KernelRow { state: usize, action: usize, reason: String },
}

/// One point of a state or action grid. `tag` distinguishes points that sit
/// outside the coordinate product (an absorbing terminal state, a discrete
/// choice); unused coordinates of a tagged point are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub coords: Vec<f64>,
    pub tag: Option<String>,
}

impl GridPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        GridPoint { coords, tag: None }
    }

    pub fn tagged(coords: Vec<f64>, tag: impl Into<String>) -> Self {
        GridPoint {
            coords,
            tag: Some(tag.into()),
        }
    }

    fn key(&self) -> (Vec<u64>, Option<&str>) {
        // -0.0 and 0.0 are the same grid value
        let bits = self
            .coords
            .iter()
            .map(|&c| if c == 0.0 { 0 } else { c.to_bits() })
            .collect();
        (bits, self.tag.as_deref())
    }
}

fn validate_points(points: &[GridPoint], arity: usize, allow_nan: bool) -> Result<(), ModelError> {
    for (index, p) in points.iter().enumerate() {
        if p.coords.len() != arity {
            return Err(ModelError::CoordinateArity {
                index,
                expected: arity,
                found: p.coords.len(),
            });
        }
        for &value in &p.coords {
            let ok = value.is_finite() || (allow_nan && value.is_nan() && p.tag.is_some());
            if !ok {
                return Err(ModelError::NonFiniteCoordinate { index, value });
            }
        }
    }
    Ok(())
}

fn first_duplicate(points: &[GridPoint]) -> Option<(usize, usize)> {
    let mut keyed: Vec<_> = points.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
    keyed.sort();
    keyed
        .windows(2)
        .find(|w| w[0].0 == w[1].0)
        .map(|w| (w[0].1.min(w[1].1), w[0].1.max(w[1].1)))
}

fn check_increasing(name: &str, axis: &[f64]) -> Result<(), ModelError> {
    if axis.is_empty() || axis.windows(2).any(|w| !(w[0] < w[1])) || axis.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::AxisNotIncreasing(name.to_string()));
    }
    Ok(())
}

/// Ordered, nonempty list of distinct states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    points: Vec<GridPoint>,
    labels: Vec<String>,
}

impl StateGrid {
    pub fn new(points: Vec<GridPoint>, labels: Vec<String>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyStateGrid);
        }
        let arity = if labels.is_empty() { points[0].coords.len() } else { labels.len() };
        validate_points(&points, arity, true)?;
        if let Some((i, j)) = first_duplicate(&points) {
            return Err(ModelError::DuplicateState(i, j));
        }
        Ok(StateGrid { points, labels })
    }

    /// Cartesian product of strictly increasing axes; the last axis varies fastest.
    pub fn product(axes: &[(&str, &[f64])]) -> Result<Self, ModelError> {
        for (name, axis) in axes {
            check_increasing(name, axis)?;
        }
        let points = cartesian(axes.iter().map(|(_, a)| *a).collect::<Vec<_>>().as_slice())
            .into_iter()
            .map(GridPoint::new)
            .collect();
        StateGrid::new(points, axes.iter().map(|(n, _)| n.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &GridPoint {
        &self.points[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

fn cartesian(axes: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Ordered, nonempty list of distinct actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    points: Vec<GridPoint>,
    labels: Vec<String>,
}

impl ActionGrid {
    pub fn new(points: Vec<GridPoint>, labels: Vec<String>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::EmptyActionGrid);
        }
        let arity = if labels.is_empty() { points[0].coords.len() } else { labels.len() };
        validate_points(&points, arity, true)?;
        if let Some((i, j)) = first_duplicate(&points) {
            return Err(ModelError::DuplicateAction(i, j));
        }
        Ok(ActionGrid { points, labels })
    }

    /// One-dimensional grid of real actions.
    pub fn scalar(label: &str, values: &[f64]) -> Result<Self, ModelError> {
        ActionGrid::new(
            values.iter().map(|&v| GridPoint::new(vec![v])).collect(),
            vec![label.to_string()],
        )
    }

    /// Purely discrete actions.
    pub fn discrete(tags: &[&str]) -> Result<Self, ModelError> {
        ActionGrid::new(
            tags.iter().map(|t| GridPoint::tagged(Vec::new(), *t)).collect(),
            Vec::new(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &GridPoint {
        &self.points[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The feasible correspondence Γ in compressed form: state `x` owns pairs
/// `offsets[x]..offsets[x + 1]`, whose actions are increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    offsets: Vec<usize>,
    actions: Vec<usize>,
    pair_state: Vec<usize>,
}

impl Feasibility {
    pub fn new(per_state: Vec<Vec<usize>>, n_actions: usize) -> Result<Self, ModelError> {
        let mut offsets = Vec::with_capacity(per_state.len() + 1);
        let mut actions = Vec::new();
        let mut pair_state = Vec::new();
        offsets.push(0);
        for (state, mut list) in per_state.into_iter().enumerate() {
            if list.is_empty() {
                return Err(ModelError::NoFeasibleAction(state));
            }
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(ModelError::DuplicateFeasibleAction { state, action: w[0] });
            }
            if let Some(&action) = list.iter().find(|&&a| a >= n_actions) {
                return Err(ModelError::ActionOutOfRange { state, action });
            }
            pair_state.extend(std::iter::repeat_n(state, list.len()));
            actions.extend(list);
            offsets.push(actions.len());
        }
        Ok(Feasibility {
            offsets,
            actions,
            pair_state,
        })
    }

    pub fn n_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_pairs(&self) -> usize {
        self.actions.len()
    }

    pub fn pair_range(&self, state: usize) -> Range<usize> {
        self.offsets[state]..self.offsets[state + 1]
    }

    /// Feasible action indices at `state`, increasing.
    pub fn actions(&self, state: usize) -> &[usize] {
        &self.actions[self.pair_range(state)]
    }

    pub fn pair_state(&self, pair: usize) -> usize {
        self.pair_state[pair]
    }

    pub fn pair_action(&self, pair: usize) -> usize {
        self.actions[pair]
    }

    pub fn pair_index(&self, state: usize, action: usize) -> Option<usize> {
        let range = self.pair_range(state);
        self.actions[range.clone()]
            .binary_search(&action)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn contains(&self, state: usize, action: usize) -> bool {
        self.pair_index(state, action).is_some()
    }
}

/// Rewards on the feasible pairs, in pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    values: Vec<ExtReal>,
}

impl RewardTable {
    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn get(&self, pair: usize) -> ExtReal {
        self.values[pair]
    }
}

/// Sparse transition rows, one per feasible pair. Targets are increasing
/// and every stored probability is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticKernel {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl StochasticKernel {
    pub fn row(&self, pair: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[pair]..self.offsets[pair + 1];
        (&self.targets[r.clone()], &self.probs[r])
    }

    pub fn n_entries(&self) -> usize {
        self.targets.len()
    }

    /// `Σ q(x′) f(x′)`.
    pub fn expect(&self, pair: usize, f: &[f64]) -> f64 {
        let (t, q) = self.row(pair);
        t.iter().zip(q).map(|(&j, &p)| p * f[j]).sum()
    }

    /// Expectation of an extended-real function: any `−∞` charged with
    /// positive probability makes the result `−∞`.
    pub fn expect_ext(&self, pair: usize, f: &[ExtReal]) -> ExtReal {
        let (t, q) = self.row(pair);
        let mut acc = 0.0;
        for (&j, &p) in t.iter().zip(q) {
            match f[j] {
                ExtReal::Finite(v) => acc += p * v,
                ExtReal::NegInf => return ExtReal::NegInf,
            }
        }
        ExtReal::Finite(acc)
    }
}

/// Normalizes one transition row: merges duplicate targets, drops exact
/// zeros, sorts by target and checks stochasticity.
pub fn normalize_row(
    mut row: Vec<(usize, f64)>,
    n_states: usize,
) -> Result<Vec<(usize, f64)>, String> {
    if let Some(&(_, p)) = row.iter().find(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
        return Err(format!("probability {p} is not a nonnegative real"));
    }
    if let Some(&(j, _)) = row.iter().find(|(j, _)| *j >= n_states) {
        return Err(format!("target state {j} out of range"));
    }
    row.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (j, p) in row {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += p,
            _ => merged.push((j, p)),
        }
    }
    merged.retain(|&(_, p)| p > 0.0);
    let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("row sums to {sum}"));
    }
    Ok(merged)
}

/// A finite dynamic program `(X, A, Γ, r, β, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicProgram {
    states: StateGrid,
    actions: ActionGrid,
    feasibility: Feasibility,
    rewards: RewardTable,
    beta: f64,
    kernel: StochasticKernel,
}

impl DynamicProgram {
    pub fn states(&self) -> &StateGrid {
        &self.states
    }

    pub fn actions(&self) -> &ActionGrid {
        &self.actions
    }

    pub fn feasibility(&self) -> &Feasibility {
        &self.feasibility
    }

    pub fn rewards(&self) -> &RewardTable {
        &self.rewards
    }

    pub fn kernel(&self) -> &StochasticKernel {
        &self.kernel
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.feasibility.n_pairs()
    }

    pub fn pair_state(&self, pair: usize) -> usize {
        self.feasibility.pair_state(pair)
    }

    pub fn pair_action(&self, pair: usize) -> usize {
        self.feasibility.pair_action(pair)
    }

    pub fn pair_range(&self, state: usize) -> Range<usize> {
        self.feasibility.pair_range(state)
    }

    pub fn pair_index(&self, state: usize, action: usize) -> Option<usize> {
        self.feasibility.pair_index(state, action)
    }

    pub fn reward(&self, pair: usize) -> ExtReal {
        self.rewards.get(pair)
    }

    /// Same program with every reward replaced by `max(r, floor)`.
    pub fn truncated_below(&self, floor: f64) -> DynamicProgram {
        assert!(floor.is_finite(), "truncation floor must be finite");
        let values = self
            .rewards
            .values
            .iter()
            .map(|r| r.max(ExtReal::Finite(floor)))
            .collect();
        DynamicProgram {
            rewards: RewardTable { values },
            ..self.clone()
        }
    }

    /// Same program with a different discount factor.
    pub fn with_beta(&self, beta: f64) -> Result<DynamicProgram, ModelError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ModelError::InvalidDiscount(beta));
        }
        Ok(DynamicProgram {
            beta,
            ..self.clone()
        })
    }
}

/// Incremental constructor for [`DynamicProgram`]. Pairs may be pushed in any
/// order; they are sorted into the canonical layout by [`ProgramBuilder::build`].
#[derive(Debug)]
pub struct ProgramBuilder {
    states: StateGrid,
    actions: ActionGrid,
    beta: f64,
    pairs: Vec<Vec<(usize, ExtReal, Vec<(usize, f64)>)>>,
}

impl ProgramBuilder {
    pub fn new(states: StateGrid, actions: ActionGrid, beta: f64) -> Self {
        let n = states.len();
        ProgramBuilder {
            states,
            actions,
            beta,
            pairs: vec![Vec::new(); n],
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Declares action `action` feasible at `state` with the given reward and
    /// transition row `(target state, probability)`.
    pub fn push(
        &mut self,
        state: usize,
        action: usize,
        reward: ExtReal,
        row: Vec<(usize, f64)>,
    ) -> Result<(), ModelError> {
        if state >= self.pairs.len() {
            return Err(ModelError::StateOutOfRange(state));
        }
        self.pairs[state].push((action, reward, row));
        Ok(())
    }

    pub fn build(self) -> Result<DynamicProgram, ModelError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ModelError::InvalidDiscount(self.beta));
        }
        let n_states = self.states.len();
        let mut per_state = Vec::with_capacity(n_states);
        let mut rewards = Vec::new();
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        for (state, mut list) in self.pairs.into_iter().enumerate() {
            list.sort_by_key(|(a, _, _)| *a);
            per_state.push(list.iter().map(|(a, _, _)| *a).collect::<Vec<_>>());
            for (action, reward, row) in list {
                if let ExtReal::Finite(v) = reward {
                    if !v.is_finite() {
                        return Err(ModelError::InvalidReward { state, action, value: v });
                    }
                }
                rewards.push(reward);
                let row = normalize_row(row, n_states)
                    .map_err(|reason| ModelError::KernelRow { state, action, reason })?;
                for (j, p) in row {
                    targets.push(j);
                    probs.push(p);
                }
                offsets.push(targets.len());
            }
        }
        let feasibility = Feasibility::new(per_state, self.actions.len())?;
        Ok(DynamicProgram {
            states: self.states,
            actions: self.actions,
            feasibility,
            rewards: RewardTable { values: rewards },
            beta: self.beta,
            kernel: StochasticKernel {
                offsets,
                targets,
                probs,
            },
        })
    }
}

/// Error for values that must be finite on the feasible set.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueError {
    #[error("expected {expected} values, got {found}")]
    Length { expected: usize, found: usize },
    #[error("value at pair {pair} is {value}, not finite")]
    NonFinite { pair: usize, value: f64 },
}

/// A real function on the feasible pairs: an element of the space the
/// transformed operator acts on.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GFunction {
    values: Vec<f64>,
}

impl GFunction {
    pub fn new(dp: &DynamicProgram, values: Vec<f64>) -> Result<Self, ValueError> {
        if values.len() != dp.n_pairs() {
            return Err(ValueError::Length {
                expected: dp.n_pairs(),
                found: values.len(),
            });
        }
        if let Some((pair, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ValueError::NonFinite { pair, value });
        }
        Ok(GFunction { values })
    }

    pub fn zeros(dp: &DynamicProgram) -> Self {
        GFunction::constant(dp, 0.0)
    }

    pub fn constant(dp: &DynamicProgram, c: f64) -> Self {
        assert!(c.is_finite());
        GFunction {
            values: vec![c; dp.n_pairs()],
        }
    }

    /// Builds `g(x, a)` from a closure over `(pair, state, action)`.
    pub fn from_fn(dp: &DynamicProgram, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let values: Vec<f64> = (0..dp.n_pairs())
            .map(|p| f(p, dp.pair_state(p), dp.pair_action(p)))
            .collect();
        assert!(values.iter().all(|v| v.is_finite()), "g must be finite");
        GFunction { values }
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        GFunction { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, pair: usize) -> f64 {
        self.values[pair]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, c: f64) -> GFunction {
        GFunction {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn sub(&self, other: &GFunction) -> GFunction {
        assert_eq!(self.len(), other.len());
        GFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> GFunction {
        GFunction {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &GFunction) -> GFunction {
        assert_eq!(self.len(), other.len());
        GFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }
}

/// A weight κ ≥ 1 on states together with the Assumption constants
/// `r̄ ≤ dκ` and `E κ(x′) ≤ ακ(x)`, `αβ < 1`, certified for one program.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeightFunction {
    kappa: Vec<f64>,
    d: f64,
    alpha: f64,
    beta: f64,
}

impl WeightFunction {
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The contraction modulus bound αβ.
    pub fn modulus_bound(&self) -> f64 {
        self.alpha * self.beta
    }

    pub fn is_unit(&self) -> bool {
        self.kappa.iter().all(|&k| k == 1.0)
    }

    /// True when the stored constants still bound `dp`.
    pub fn certifies(&self, dp: &DynamicProgram) -> bool {
        if self.kappa.len() != dp.n_states() || self.beta != dp.beta() {
            return false;
        }
        match fit_constants(dp, &self.kappa) {
            Ok(fit) => {
                fit.d <= self.d * (1.0 + STOCHASTIC_TOL) + STOCHASTIC_TOL
                    && fit.alpha <= self.alpha * (1.0 + STOCHASTIC_TOL)
            }
            Err(_) => false,
        }
    }
}

/// `max |g(x,a)| / κ(x)` over the feasible pairs.
pub fn weighted_sup_norm(g: &GFunction, w: &WeightFunction, dp: &DynamicProgram) -> f64 {
    weighted_sup_norm_with(g.values(), w.kappa(), dp)
}

/// [`weighted_sup_norm`] for a raw pair-indexed slice and weight.
pub fn weighted_sup_norm_with(values: &[f64], kappa: &[f64], dp: &DynamicProgram) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(p, v)| v.abs() / kappa[dp.pair_state(p)])
        .fold(0.0, f64::max)
}

/// `max |v(x)| / κ(x)` over states, for finite state functions.
pub fn weighted_sup_norm_states(values: &[f64], kappa: &[f64]) -> f64 {
    values
        .iter()
        .zip(kappa)
        .map(|(v, k)| v.abs() / k)
        .fold(0.0, f64::max)
}

/// Reward envelope `r̄(x) = max_{a ∈ Γ(x)} r(x, a)`.
pub fn rbar(dp: &DynamicProgram) -> Vec<ExtReal> {
    (0..dp.n_states())
        .map(|x| {
            dp.pair_range(x)
                .map(|p| dp.reward(p))
                .fold(ExtReal::NegInf, ExtReal::max)
        })
        .collect()
}

/// `ℓ(x, a) = E_{x,a} r̄(x′)` on every feasible pair.
pub fn ell(dp: &DynamicProgram) -> Vec<ExtReal> {
    let envelope = rbar(dp);
    (0..dp.n_pairs())
        .map(|p| dp.kernel().expect_ext(p, &envelope))
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EllCheck {
    pub bounded_below: bool,
    pub min_value: ExtReal,
    /// `(state, action)` attaining the minimum.
    pub witness: (usize, usize),
}

/// Whether `ℓ` is bounded below (finite everywhere, on a finite grid).
pub fn check_ell_bounded_below(dp: &DynamicProgram) -> EllCheck {
    let values = ell(dp);
    let (pair, min_value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, values[0]), |best, (p, v)| if v < best.1 { (p, v) } else { best });
    EllCheck {
        bounded_below: min_value.is_finite(),
        min_value,
        witness: (dp.pair_state(pair), dp.pair_action(pair)),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssumptionError {
    #[error("kappa has {found} entries, program has {expected} states")]
    WeightLength { expected: usize, found: usize },
    #[error("kappa({state}) = {value} < 1")]
    NonPositiveWeight { state: usize, value: f64 },
    #[error(
        "discounted weight growth violated at (state {state}, action {action}): alpha = {alpha}, alpha*beta = {alpha_beta} >= 1"
    )]
    ViolatedDiscountedGrowth {
        state: usize,
        action: usize,
        alpha: f64,
        alpha_beta: f64,
    },
    #[error("supplied {name} = {supplied} is below the smallest admissible value {required}")]
    OverrideTooSmall {
        name: &'static str,
        supplied: f64,
        required: f64,
    },
}

struct Fit {
    d: f64,
    alpha: f64,
    worst_pair: usize,
}

fn fit_constants(dp: &DynamicProgram, kappa: &[f64]) -> Result<Fit, AssumptionError> {
    if kappa.len() != dp.n_states() {
        return Err(AssumptionError::WeightLength {
            expected: dp.n_states(),
            found: kappa.len(),
        });
    }
    if let Some((state, &value)) = kappa.iter().enumerate().find(|(_, k)| !(**k >= 1.0 && k.is_finite())) {
        return Err(AssumptionError::NonPositiveWeight { state, value });
    }
    let d = rbar(dp)
        .iter()
        .zip(kappa)
        .map(|(r, k)| r.finite().map_or(0.0, |v| v.max(0.0)) / k)
        .fold(0.0, f64::max);
    let mut alpha = 0.0;
    let mut worst_pair = 0;
    for p in 0..dp.n_pairs() {
        let (targets, probs) = dp.kernel().row(p);
        let mass: f64 = probs.iter().sum();
        let weighted: f64 = targets.iter().zip(probs).map(|(&j, &q)| q * kappa[j]).sum();
        let ratio = (weighted / mass) / kappa[dp.pair_state(p)];
        if ratio > alpha {
            alpha = ratio;
            worst_pair = p;
        }
    }
    Ok(Fit { d, alpha, worst_pair })
}

/// Fits the tightest Assumption constants for `kappa` and certifies `αβ < 1`.
pub fn check_assumption_ws(dp: &DynamicProgram, kappa: &[f64]) -> Result<WeightFunction, AssumptionError> {
    let fit = fit_constants(dp, kappa)?;
    let alpha_beta = fit.alpha * dp.beta();
    if alpha_beta >= 1.0 {
        return Err(AssumptionError::ViolatedDiscountedGrowth {
            state: dp.pair_state(fit.worst_pair),
            action: dp.pair_action(fit.worst_pair),
            alpha: fit.alpha,
            alpha_beta,
        });
    }
    Ok(WeightFunction {
        kappa: kappa.to_vec(),
        d: fit.d,
        alpha: fit.alpha,
        beta: dp.beta(),
    })
}

/// Validates user-supplied constants: each must dominate the fitted value and
/// `αβ < 1` must hold for the supplied α.
pub fn check_assumption_ws_override(
    dp: &DynamicProgram,
    kappa: &[f64],
    d: Option<f64>,
    alpha: Option<f64>,
) -> Result<WeightFunction, AssumptionError> {
    let mut w = check_assumption_ws(dp, kappa)?;
    if let Some(d) = d {
        if !(d >= w.d) {
            return Err(AssumptionError::OverrideTooSmall {
                name: "d",
                supplied: d,
                required: w.d,
            });
        }
        w.d = d;
    }
    if let Some(alpha) = alpha {
        if !(alpha >= w.alpha) {
            return Err(AssumptionError::OverrideTooSmall {
                name: "alpha",
                supplied: alpha,
                required: w.alpha,
            });
        }
        if alpha * dp.beta() >= 1.0 {
            let worst = fit_constants(dp, kappa)?.worst_pair;
            return Err(AssumptionError::ViolatedDiscountedGrowth {
                state: dp.pair_state(worst),
                action: dp.pair_action(worst),
                alpha,
                alpha_beta: alpha * dp.beta(),
            });
        }
        w.alpha = alpha;
    }
    Ok(w)
}

/// Unit weight κ ≡ 1.
pub fn unit_kappa(dp: &DynamicProgram) -> Vec<f64> {
    vec![1.0; dp.n_states()]
}
