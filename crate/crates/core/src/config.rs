//! JSON run configurations and their resolution into built models.
//!
//! The format is documented in `docs/formats.md` and by the schemas in
//! `docs/schemas/`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::DiagnosticsOptions;
use crate::discretize::{discretize_ar1_log, lognormal_quadrature, DiscretizeError, MarkovChain, QuadratureRule};
use crate::ext_real::ExtReal;
use crate::models::{
    build_default, build_job_search, build_savings, build_savings_cir, BuildError, BuildWarning, CirSavingsSpec,
    CrraUtility, DefaultModel, DefaultSpec, JobSearchModel, JobSearchSpec, LowerBoundReport, ModelSpec,
    OutputMap, SavingsModel, SavingsSpec,
};
use crate::operator::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::program::{ActionGrid, DynamicProgram, GridPoint, ModelError, ProgramBuilder, StateGrid};

/// Node count for lognormal rules when `n` is omitted.
pub const DEFAULT_QUADRATURE_NODES: usize = 7;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Omit to skip diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Weight function κ on states, optionally with explicit Assumption constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kappa: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Savings {
        beta: f64,
        gamma: f64,
        gross_return: f64,
        income: ChainConfig,
        wealth_grid: GridConfig,
    },
    JobSearch {
        beta: f64,
        gamma: f64,
        z: ChainConfig,
        xi: ShockConfig,
        zeta: ShockConfig,
    },
    Default {
        beta: f64,
        gamma: f64,
        gross_return: f64,
        borrowing_limit: f64,
        z: ChainConfig,
        output_map: OutputMapConfig,
        xi: ShockConfig,
        asset_grid: GridConfig,
    },
    SavingsCir {
        beta: f64,
        gamma: f64,
        z: ChainConfig,
        return_levels: Vec<f64>,
        return_shock: ShockConfig,
        income_levels: Vec<f64>,
        income_shock: ShockConfig,
        wealth_grid: GridConfig,
    },
    /// A finite program given pair by pair.
    Explicit {
        beta: f64,
        states: Vec<PointConfig>,
        #[serde(default)]
        state_labels: Vec<String>,
        actions: Vec<PointConfig>,
        #[serde(default)]
        action_labels: Vec<String>,
        pairs: Vec<PairConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMapConfig {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ChainConfig {
    Ar1Log { ar1_log: Ar1Config },
    Explicit { states: Vec<f64>, transition: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Config {
    pub rho: f64,
    pub sigma: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ShockConfig {
    Lognormal { lognormal: LognormalConfig },
    Point { point: f64 },
    Explicit { nodes: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LognormalConfig {
    pub mu: f64,
    pub sigma: f64,
    #[serde(default = "default_nodes")]
    pub n: usize,
}

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridConfig {
    Linear { min: f64, max: f64, n: usize },
    Points { points: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default)]
    pub coords: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub state: usize,
    pub action: usize,
    /// `null` means `−∞`; the field itself is required.
    #[serde(deserialize_with = "Option::deserialize")]
    pub reward: Option<f64>,
    /// `[target state, probability]` entries.
    pub transitions: Vec<(usize, f64)>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_json(&text)
    }

    /// Range checks that do not need the model to be built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(invalid(format!("solver.tol = {} must be positive", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(invalid("solver.max_iter must be at least 1"));
        }
        if let Some(d) = &self.diagnostics {
            if !(d.oracle_tol > 0.0) || d.oracle_floors.iter().any(|f| !f.is_finite()) {
                return Err(invalid("diagnostics.oracle_tol must be positive and floors finite"));
            }
        }
        if let Some(w) = &self.weight {
            if w.kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
                return Err(invalid("weight.kappa entries must be positive"));
            }
        }
        let beta = self.model.beta();
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta = {beta} must lie in (0, 1)")));
        }
        if let Some(gamma) = self.model.gamma() {
            if !(gamma > 1.0 && gamma.is_finite()) {
                return Err(invalid(format!("gamma = {gamma} must exceed 1")));
            }
        }
        match &self.model {
            ModelConfig::Savings { income, wealth_grid, .. } => {
                check_chain("income", income)?;
                check_grid_config("wealth_grid", wealth_grid)?;
            }
            ModelConfig::JobSearch { z, xi, zeta, .. } => {
                check_chain("z", z)?;
                check_shock("xi", xi)?;
                check_shock("zeta", zeta)?;
            }
            ModelConfig::Default {
                borrowing_limit,
                z,
                xi,
                asset_grid,
                ..
            } => {
                if !(*borrowing_limit > 0.0 && borrowing_limit.is_finite()) {
                    return Err(invalid(format!("borrowing_limit b = {borrowing_limit} must be positive")));
                }
                check_chain("z", z)?;
                check_shock("xi", xi)?;
                check_grid_config("asset_grid", asset_grid)?;
            }
            ModelConfig::SavingsCir {
                z,
                return_shock,
                income_shock,
                wealth_grid,
                ..
            } => {
                check_chain("z", z)?;
                check_shock("return_shock", return_shock)?;
                check_shock("income_shock", income_shock)?;
                check_grid_config("wealth_grid", wealth_grid)?;
            }
            ModelConfig::Explicit { .. } => {}
        }
        Ok(())
    }
}

fn check_chain(name: &str, chain: &ChainConfig) -> Result<(), ConfigError> {
    if let ChainConfig::Ar1Log { ar1_log } = chain {
        if ar1_log.n < 2 {
            return Err(invalid(format!("{name}.ar1_log.n = {} must be at least 2", ar1_log.n)));
        }
    }
    Ok(())
}

fn check_shock(name: &str, shock: &ShockConfig) -> Result<(), ConfigError> {
    if let ShockConfig::Lognormal { lognormal } = shock {
        if lognormal.n < 1 {
            return Err(invalid(format!("{name}.lognormal.n must be at least 1")));
        }
    }
    Ok(())
}

fn check_grid_config(name: &str, grid: &GridConfig) -> Result<(), ConfigError> {
    match grid {
        GridConfig::Linear { min, max, n } => {
            if *n < 2 {
                return Err(invalid(format!("{name}.n = {n} must be at least 2")));
            }
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(invalid(format!("{name} needs finite min < max")));
            }
        }
        GridConfig::Points { points } => {
            if points.len() < 2 {
                return Err(invalid(format!("{name}.points needs at least 2 entries")));
            }
        }
    }
    Ok(())
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Savings { .. } => "savings",
            ModelConfig::JobSearch { .. } => "job_search",
            ModelConfig::Default { .. } => "default",
            ModelConfig::SavingsCir { .. } => "savings_cir",
            ModelConfig::Explicit { .. } => "explicit",
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            ModelConfig::Savings { beta, .. }
            | ModelConfig::JobSearch { beta, .. }
            | ModelConfig::Default { beta, .. }
            | ModelConfig::SavingsCir { beta, .. }
            | ModelConfig::Explicit { beta, .. } => *beta,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            ModelConfig::Savings { gamma, .. }
            | ModelConfig::JobSearch { gamma, .. }
            | ModelConfig::Default { gamma, .. }
            | ModelConfig::SavingsCir { gamma, .. } => Some(*gamma),
            ModelConfig::Explicit { .. } => None,
        }
    }

    /// The typed model specification; `None` for explicit programs.
    pub fn to_spec(&self) -> Result<Option<ModelSpec>, ConfigError> {
        let utility = |gamma: f64| CrraUtility::new(gamma).map_err(|e| invalid(e.to_string()));
        Ok(Some(match self {
            ModelConfig::Savings {
                beta,
                gamma,
                gross_return,
                income,
                wealth_grid,
            } => ModelSpec::Savings(SavingsSpec {
                beta: *beta,
                gross_return: *gross_return,
                utility: utility(*gamma)?,
                income_chain: income.resolve()?,
                wealth_grid: wealth_grid.resolve(),
            }),
            ModelConfig::JobSearch { beta, gamma, z, xi, zeta } => ModelSpec::JobSearch(JobSearchSpec {
                beta: *beta,
                utility: utility(*gamma)?,
                z_chain: z.resolve()?,
                xi: xi.resolve()?,
                zeta: zeta.resolve()?,
            }),
            ModelConfig::Default {
                beta,
                gamma,
                gross_return,
                borrowing_limit,
                z,
                output_map,
                xi,
                asset_grid,
            } => ModelSpec::Default(DefaultSpec {
                beta: *beta,
                utility: utility(*gamma)?,
                gross_return: *gross_return,
                borrowing_limit: *borrowing_limit,
                z_chain: z.resolve()?,
                output_map: match output_map {
                    OutputMapConfig::Additive => OutputMap::Additive,
                    OutputMapConfig::Multiplicative => OutputMap::Multiplicative,
                },
                xi: xi.resolve()?,
                asset_grid: asset_grid.resolve(),
            }),
            ModelConfig::SavingsCir {
                beta,
                gamma,
                z,
                return_levels,
                return_shock,
                income_levels,
                income_shock,
                wealth_grid,
            } => ModelSpec::SavingsCir(CirSavingsSpec {
                beta: *beta,
                utility: utility(*gamma)?,
                z_chain: z.resolve()?,
                return_levels: return_levels.clone(),
                return_shock: return_shock.resolve()?,
                income_levels: income_levels.clone(),
                income_shock: income_shock.resolve()?,
                wealth_grid: wealth_grid.resolve(),
            }),
            ModelConfig::Explicit { .. } => return Ok(None),
        }))
    }
}

impl ChainConfig {
    pub fn resolve(&self) -> Result<MarkovChain, DiscretizeError> {
        match self {
            ChainConfig::Ar1Log { ar1_log: a } => discretize_ar1_log(a.rho, a.sigma, a.n),
            ChainConfig::Explicit { states, transition } => MarkovChain::new(states.clone(), transition.clone()),
        }
    }
}

impl ShockConfig {
    pub fn resolve(&self) -> Result<QuadratureRule, DiscretizeError> {
        match self {
            ShockConfig::Lognormal { lognormal: l } => lognormal_quadrature(l.mu, l.sigma, l.n),
            ShockConfig::Point { point } => {
                if point.is_finite() {
                    Ok(QuadratureRule::point_mass(*point))
                } else {
                    Err(DiscretizeError::InvalidRule("non-finite point mass".into()))
                }
            }
            ShockConfig::Explicit { nodes, weights } => QuadratureRule::new(nodes.clone(), weights.clone()),
        }
    }
}

impl GridConfig {
    /// Evenly spaced with both endpoints exact, or the listed points.
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            GridConfig::Linear { min, max, n } => {
                let step = (max - min) / (*n - 1) as f64;
                (0..*n)
                    .map(|i| if i + 1 == *n { *max } else { min + step * i as f64 })
                    .collect()
            }
            GridConfig::Points { points } => points.clone(),
        }
    }
}

/// Why a configuration could not be turned into a program.
#[derive(Debug, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A built program together with the model it came from.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    Savings(SavingsModel),
    JobSearch(JobSearchModel),
    Default(DefaultModel),
    SavingsCir(SavingsModel),
    Explicit(DynamicProgram),
}

impl BuiltModel {
    pub fn dp(&self) -> &DynamicProgram {
        match self {
            BuiltModel::Savings(m) | BuiltModel::SavingsCir(m) => m.dp(),
            BuiltModel::JobSearch(m) => m.dp(),
            BuiltModel::Default(m) => m.dp(),
            BuiltModel::Explicit(dp) => dp,
        }
    }

    pub fn condition(&self) -> Option<&LowerBoundReport> {
        match self {
            BuiltModel::Savings(m) | BuiltModel::SavingsCir(m) => Some(m.condition()),
            BuiltModel::JobSearch(m) => Some(m.condition()),
            BuiltModel::Default(m) => Some(m.condition()),
            BuiltModel::Explicit(_) => None,
        }
    }

    pub fn warnings(&self) -> &[BuildWarning] {
        match self {
            BuiltModel::Savings(m) | BuiltModel::SavingsCir(m) => m.warnings(),
            _ => &[],
        }
    }
}

/// Builds the configured model.
pub fn build_model(model: &ModelConfig) -> Result<BuiltModel, ResolveError> {
    if let ModelConfig::Explicit {
        beta,
        states,
        state_labels,
        actions,
        action_labels,
        pairs,
    } = model
    {
        return Ok(BuiltModel::Explicit(build_explicit(
            *beta,
            states,
            state_labels,
            actions,
            action_labels,
            pairs,
        )?));
    }
    let spec = model.to_spec()?.expect("non-explicit model has a spec");
    Ok(match spec {
        ModelSpec::Savings(s) => BuiltModel::Savings(build_savings(&s)?),
        ModelSpec::JobSearch(s) => BuiltModel::JobSearch(build_job_search(&s)?),
        ModelSpec::Default(s) => BuiltModel::Default(build_default(&s)?),
        ModelSpec::SavingsCir(s) => BuiltModel::SavingsCir(build_savings_cir(&s)?),
    })
}

fn to_points(list: &[PointConfig]) -> Vec<GridPoint> {
    list.iter()
        .map(|p| GridPoint {
            coords: p.coords.clone(),
            tag: p.tag.clone(),
        })
        .collect()
}

fn build_explicit(
    beta: f64,
    states: &[PointConfig],
    state_labels: &[String],
    actions: &[PointConfig],
    action_labels: &[String],
    pairs: &[PairConfig],
) -> Result<DynamicProgram, ModelError> {
    let states = StateGrid::new(to_points(states), state_labels.to_vec())?;
    let actions = ActionGrid::new(to_points(actions), action_labels.to_vec())?;
    let n_actions = actions.len();
    let mut builder = ProgramBuilder::new(states, actions, beta);
    for p in pairs {
        if p.action >= n_actions {
            return Err(ModelError::ActionOutOfRange {
                state: p.state,
                action: p.action,
            });
        }
        let reward = match p.reward {
            None => ExtReal::NegInf,
            Some(v) => ExtReal::from_f64(v).ok_or(ModelError::InvalidReward {
                state: p.state,
                action: p.action,
                value: v,
            })?,
        };
        builder.push(p.state, p.action, reward, p.transitions.clone())?;
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAVINGS: &str = r#"{
        "model": {
            "kind": "savings", "beta": 0.95, "gamma": 2.0, "gross_return": 1.02,
            "income": {"states": [1.0, 2.0], "transition": [[0.9, 0.1], [0.1, 0.9]]},
            "wealth_grid": {"min": 0.5, "max": 5.0, "n": 10}
        },
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_builds() {
        let c = RunConfig::from_json(SAVINGS).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.diagnostics.is_none());
        let m = build_model(&c.model).unwrap();
        assert!(matches!(m, BuiltModel::Savings(_)));
        assert!(m.condition().unwrap().passed);
    }

    #[test]
    fn linear_grid_hits_endpoints() {
        let g = GridConfig::Linear { min: 0.1, max: 0.7, n: 7 }.resolve();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[6], 0.7);
    }

    #[test]
    fn range_checks_at_parse_time() {
        let bad_gamma = SAVINGS.replace("\"gamma\": 2.0", "\"gamma\": 0.5");
        assert!(matches!(RunConfig::from_json(&bad_gamma), Err(ConfigError::Invalid(_))));
        let bad_beta = SAVINGS.replace("\"beta\": 0.95", "\"beta\": 1.0");
        assert!(matches!(RunConfig::from_json(&bad_beta), Err(ConfigError::Invalid(_))));
        let bad_n = SAVINGS.replace("\"n\": 10", "\"n\": 1");
        assert!(matches!(RunConfig::from_json(&bad_n), Err(ConfigError::Invalid(_))));
        let typo = SAVINGS.replace("\"gross_return\"", "\"gross_retrun\"");
        assert!(matches!(RunConfig::from_json(&typo), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn shock_forms() {
        let point: ShockConfig = serde_json::from_str(r#"{"point": 1.5}"#).unwrap();
        assert_eq!(point.resolve().unwrap().nodes(), &[1.5]);
        let logn: ShockConfig = serde_json::from_str(r#"{"lognormal": {"mu": 0.0, "sigma": 0.1}}"#).unwrap();
        assert_eq!(logn.resolve().unwrap().len(), DEFAULT_QUADRATURE_NODES);
        let explicit: ShockConfig = serde_json::from_str(r#"{"nodes": [1, 2], "weights": [0.5, 0.5]}"#).unwrap();
        assert_eq!(explicit.resolve().unwrap().len(), 2);
    }

    #[test]
    fn explicit_model_with_neg_inf_reward() {
        let text = r#"{
            "model": {"kind": "explicit", "beta": 0.5,
                "states": [{"coords": [0]}, {"coords": [1]}],
                "actions": [{"tag": "a"}, {"tag": "b"}],
                "pairs": [
                    {"state": 0, "action": 0, "reward": null, "transitions": [[1, 1.0]]},
                    {"state": 0, "action": 1, "reward": 1.0, "transitions": [[0, 0.5], [1, 0.5]]},
                    {"state": 1, "action": 0, "reward": 0.0, "transitions": [[1, 1.0]]}
                ]},
            "output_dir": "out"
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        let dp = build_model(&c.model).unwrap().dp().clone();
        assert_eq!(dp.n_pairs(), 3);
        assert_eq!(dp.reward(0), ExtReal::NegInf);
    }
}
