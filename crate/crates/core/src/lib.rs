//! Transformed Bellman operators for dynamic programs with rewards that are
//! unbounded below.
//!
//! Instead of iterating the Bellman operator `T` on value functions, solve
//! for the fixed point `g*` of `S = W₀ M W₁` on functions of state–action
//! pairs, where `Sg(x, a) = β E_{x,a} max_{a′} {r(x′, a′) + g(x′, a′)}`. With
//! CRRA-type rewards `S` maps bounded functions into bounded functions even
//! when `T` does not, and the optimal value is recovered as `v* = M W₁ g*`.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod discretize;
pub mod ext_real;
pub mod models;
pub mod operator;
pub mod output;
pub mod program;

pub use ext_real::ExtReal;
pub use operator::{solve_fixed_point, SolveReport, SolverSettings};
pub use program::{DynamicProgram, GFunction, ProgramBuilder, WeightFunction};
