//! Finite approximations of the shock processes: Rouwenhorst chains for
//! AR(1)-in-logs persistent components and Gauss–Hermite rules for iid
//! lognormal transients.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use thiserror::Error;

use crate::ext_real::ExtReal;
use crate::models::CrraUtility;
use crate::program::STOCHASTIC_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("persistence {0} not in (-1, 1)")]
    InvalidPersistence(f64),
    #[error("node count {0} is too small")]
    InvalidNodes(usize),
    #[error("spread {0} must be a positive real")]
    InvalidSpread(f64),
    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
}

/// A finite Markov chain in levels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MarkovChain {
    states: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn new(states: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self, DiscretizeError> {
        let n = states.len();
        if n == 0 {
            return Err(DiscretizeError::InvalidChain("no states".into()));
        }
        if let Some(s) = states.iter().find(|s| !s.is_finite()) {
            return Err(DiscretizeError::InvalidChain(format!("state value {s} is not finite")));
        }
        if transition.len() != n {
            return Err(DiscretizeError::InvalidChain(format!(
                "transition has {} rows for {n} states",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(DiscretizeError::InvalidChain(format!("row {i} has {} entries", row.len())));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(DiscretizeError::InvalidChain(format!("row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(DiscretizeError::InvalidChain(format!("row {i} sums to {sum}")));
            }
        }
        Ok(MarkovChain { states, transition })
    }

    /// Chain whose rows all equal `probs`.
    pub fn iid(states: Vec<f64>, probs: Vec<f64>) -> Result<Self, DiscretizeError> {
        let n = states.len();
        MarkovChain::new(states, vec![probs; n])
    }

    pub fn constant(value: f64) -> Self {
        MarkovChain {
            states: vec![value],
            transition: vec![vec![1.0]],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.transition[i][j]
    }
}

/// A discrete probability rule `Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self, DiscretizeError> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(DiscretizeError::InvalidRule(format!(
                "{} nodes and {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(DiscretizeError::InvalidRule("non-finite node".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(DiscretizeError::InvalidRule("negative weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(DiscretizeError::InvalidRule(format!("weights sum to {sum}")));
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn point_mass(x: f64) -> Self {
        assert!(x.is_finite());
        QuadratureRule {
            nodes: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// Rouwenhorst discretization of `ln z′ = ρ ln z + σ ε′`, returned in levels.
///
/// The log grid is symmetric on `±σ_z √(n − 1)` with `σ_z² = σ² / (1 − ρ²)`,
/// so the chain's stationary log variance is `σ_z²` and its conditional log
/// mean is `ρ ln z`.
pub fn discretize_ar1_log(rho: f64, sigma: f64, n: usize) -> Result<MarkovChain, DiscretizeError> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(DiscretizeError::InvalidPersistence(rho));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DiscretizeError::InvalidSpread(sigma));
    }
    if n < 2 {
        return Err(DiscretizeError::InvalidNodes(n));
    }
    let p = (1.0 + rho) / 2.0;
    let mut matrix = vec![vec![p, 1.0 - p], vec![1.0 - p, p]];
    for m in 3..=n {
        let mut next = vec![vec![0.0; m]; m];
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                let v = matrix[i][j];
                next[i][j] += p * v;
                next[i][j + 1] += (1.0 - p) * v;
                next[i + 1][j] += (1.0 - p) * v;
                next[i + 1][j + 1] += p * v;
            }
        }
        for row in next.iter_mut().take(m - 1).skip(1) {
            for v in row.iter_mut() {
                *v /= 2.0;
            }
        }
        matrix = next;
    }
    let sigma_z = sigma / (1.0 - rho * rho).sqrt();
    let psi = sigma_z * ((n - 1) as f64).sqrt();
    let step = 2.0 * psi / (n - 1) as f64;
    let states = (0..n).map(|i| (-psi + step * i as f64).exp()).collect();
    MarkovChain::new(states, matrix)
}

/// Gauss–Hermite rule for `exp(μ + σ N(0,1))`: nodes `exp(μ + √2 σ hᵢ)`,
/// weights `wᵢ / √π` renormalized to sum to one.
pub fn lognormal_quadrature(mu: f64, sigma: f64, n: usize) -> Result<QuadratureRule, DiscretizeError> {
    let deg = NonZeroUsize::new(n).ok_or(DiscretizeError::InvalidNodes(n))?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(DiscretizeError::InvalidSpread(sigma));
    }
    if !mu.is_finite() {
        return Err(DiscretizeError::InvalidRule(format!("log-mean {mu} is not finite")));
    }
    let rule = GaussHermite::new(deg);
    let pairs = rule.as_node_weight_pairs();
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    let nodes = pairs
        .iter()
        .map(|(h, _)| (mu + std::f64::consts::SQRT_2 * sigma * h).exp())
        .collect();
    let weights = pairs.iter().map(|(_, w)| w / total).collect();
    QuadratureRule::new(nodes, weights)
}

/// `Σ wᵢ u(xᵢ)`; `−∞` as soon as a node with positive weight has `u = −∞`.
pub fn expected_utility_on_rule(u: &CrraUtility, rule: &QuadratureRule) -> ExtReal {
    let mut acc = 0.0;
    for (x, w) in rule.iter() {
        if w == 0.0 {
            continue;
        }
        match u.eval(x) {
            ExtReal::Finite(v) => acc += w * v,
            ExtReal::NegInf => return ExtReal::NegInf,
        }
    }
    ExtReal::Finite(acc)
}
