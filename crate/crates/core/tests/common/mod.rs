#![allow(dead_code)]

use std::path::PathBuf;

use bellman_transform::config::{build_model, BuiltModel, RunConfig};
use bellman_transform::operator::{solve_fixed_point, SolveReport, SolverSettings};
use bellman_transform::program::{check_assumption_ws, unit_kappa, DynamicProgram, GFunction, WeightFunction};

/// The four model configs shipped in `configs/`.
pub const BUILT_IN: [&str; 4] = ["savings", "job_search", "default", "savings_cir"];

/// Every shipped config that solves.
pub const SOLVABLE: [&str; 5] = ["savings", "job_search", "job_search_degenerate", "default", "savings_cir"];

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

pub fn config(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn built(name: &str) -> BuiltModel {
    build_model(&config(name).model).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn unit_weight(dp: &DynamicProgram) -> WeightFunction {
    check_assumption_ws(dp, &unit_kappa(dp)).expect("unit weight certifies built-in models")
}

pub fn solve(dp: &DynamicProgram, w: &WeightFunction, tol: f64) -> SolveReport {
    solve_from(dp, w, &GFunction::zeros(dp), tol)
}

pub fn solve_from(dp: &DynamicProgram, w: &WeightFunction, g0: &GFunction, tol: f64) -> SolveReport {
    solve_fixed_point(dp, w, g0, &SolverSettings::with_tol(tol)).expect("solve converges")
}
